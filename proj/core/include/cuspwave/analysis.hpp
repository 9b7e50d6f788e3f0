#ifndef CUSPWAVE_ANALYSIS_HPP
#define CUSPWAVE_ANALYSIS_HPP

#include <span>
#include <utility>
#include <vector>

#include "cuspwave/eigensolver.hpp"
#include "cuspwave/potential.hpp"

namespace cuspwave {

/// A = integral of |x|^-6 over the exterior of the unit cube
///   = 1/3 + (5*sqrt(2)/2) * atan(1/sqrt(2))  ~ 2.50938.
double cubic_tail_constant() noexcept;
/// 4*pi/3, the spherical counterpart.
double spherical_tail_constant() noexcept;

/// Leading-order coefficient of the eigenvalue error law: the error behaves
/// like (prefactor / M^3) * sum_I Z_I^2 psi(R_I)^2 with
///   Spherical: prefactor = 2 L^3 / (3 pi^3)
///   Cubic:     prefactor = A L^3 / (2 pi^4).
struct CorrectionConstants {
    CutoffShape shape;
    double prefactor;

    static CorrectionConstants for_shape(CutoffShape shape, const Cell& cell);
};

/// (prefactor / M^3) * sum_I Z_I^2 psi_i^M(R_I)^2 for the i-th eigenpair,
/// with psi evaluated from the computed eigenvector. The solution must be
/// phase-normalized; a significant imaginary part at a nucleus throws
/// PhaseError. Always >= 0.
double first_order_correction(const EigenSolution& solution, const ChargeConfig& config,
                              const CorrectionConstants& constants, int cutoff,
                              int which = 0);

/// Sum of |k|^-exponent over the integer lattice outside the cutoff region
/// (|k| > M spherical, |k|_inf > M cubic), exact to ~1e-13 relative.
/// exponent <= 3 diverges and throws DomainError.
double tail_sum(int cutoff, int exponent, CutoffShape shape);

/// sum_{k != 0} |k|^-exponent over Z^3 (Epstein zeta of the cubic lattice),
/// by the theta-function representation; converges like exp(-pi |k|^2).
double lattice_sum(int exponent);

/// Root-mean-square relative residual, per shell of |k|, between the computed
/// Fourier coefficients and the cusp-driven prediction
///   psi_hat_K ~ 8 pi / (|cell|^{1/2} |K|^4) sum_I Z_I psi(R_I) e^{-i K.R_I}.
/// Shells are (lo, hi] in integer lattice units; an empty shell throws.
std::vector<double> fourier_tail_profile(const EigenSolution& solution,
                                         const ChargeConfig& config,
                                         std::span<const std::pair<double, double>> shells,
                                         int which = 0);

/// Both sides of the eigenvalue-error identity
///   lhs = E_M - E_ref,   rhs = -<psi^M, V (I - P_M) psi_ref>
/// with V the potential part of op_ref and the inner product taken in the
/// reference basis. Their ratio tends to 1 as M grows.
std::pair<double, double> error_identity_check(const EigenSolution& solution_m,
                                               const EigenSolution& solution_ref,
                                               const HamiltonianOperator& op_ref,
                                               int which = 0);

/// Per-cutoff results of a convergence study, one row per M.
struct ConvergenceRecord {
    int cutoff = 0;
    double energy = 0.0;            // E_M
    double reference_energy = 0.0;  // E_ref
    double raw_error = 0.0;         // E_M - E_ref
    double predicted_error = 0.0;   // first-order correction value
    double corrected_error = 0.0;   // raw_error - predicted_error (signed)
    std::vector<double> psi_at_nuclei;
    double residual_coupling = 0.0; // rhs of the error identity (NaN if no reference vector)
    double tail_fit = 0.0;          // shell residual of the Fourier-tail law (NaN if M too small)
};

struct CancellationRow {
    int cutoff = 0;
    double difference_error = 0.0; // D_M
    double total_error = 0.0;      // S_M
};

/// D_M = |(E1_M - E2_M) - (E1_ref - E2_ref)|, S_M = |E1_M - E1_ref| + |E2_M - E2_ref|.
/// The two runs must share the same cutoff grid.
std::vector<CancellationRow> cancellation_metrics(std::span<const ConvergenceRecord> run1,
                                                  std::span<const ConvergenceRecord> run2);

struct RichardsonFit {
    double limit = 0.0;       // extrapolated E
    double coefficient = 0.0; // c in E_M = E + c / M^rate
};

/// Least-squares fit of E_M = E + c/M^rate on the largest ceil(n/2) points.
/// Needs >= 3 ascending distinct cutoffs.
RichardsonFit richardson_reference(std::span<const std::pair<int, double>> pairs,
                                   double rate = 3.0);

/// Least-squares slope of log(err) against log(M). All errors must be > 0.
double slope_fit(std::span<const std::pair<double, double>> pairs);

} // namespace cuspwave

#endif
