#ifndef CUSPWAVE_EIGENSOLVER_HPP
#define CUSPWAVE_EIGENSOLVER_HPP

#include <cstdint>
#include <vector>

#include "cuspwave/hamiltonian.hpp"
#include "cuspwave/lattice.hpp"

namespace cuspwave {

struct SolverOptions {
    int n_eigenpairs = 1;
    /// 0 selects n_eigenpairs + 2; extra vectors keep degenerate clusters
    /// converging together.
    int block_size = 0;
    /// Convergence threshold on ||H psi - E psi|| / ||psi||.
    double residual_tol = 1e-8;
    int max_iterations = 500;
    /// Shift sigma of the kinetic preconditioner (1/2|K|^2 + sigma)^{-1}.
    /// Values <= 0 select max(1, |E_est|) from a 3-step Lanczos warmup.
    double preconditioner_shift = 0.0;
    std::uint64_t seed = 1234;
    /// Basis sizes up to this are diagonalized densely instead of iterated.
    std::size_t dense_fallback_threshold = 2000;
    /// Optional warm start: fields are embedded into the solve basis and used
    /// as leading block columns (the rest is filled per the seed).
    std::vector<FourierField> initial_guess;
};

struct EigenSolution {
    std::vector<double> eigenvalues;        // ascending, Hartree
    std::vector<FourierField> eigenvectors; // orthonormal, Hermitian-symmetric
    std::vector<double> residuals;          // ||H psi - E psi|| per pair
    int iterations = 0;
    bool dense_path = false;
};

/// Lowest n_eigenpairs of the discrete problem on the operator's basis.
/// Deterministic for fixed options. Uses a locally optimal block
/// preconditioned conjugate-gradient iteration, or a dense diagonalization in
/// the real (cos/sin) parametrization of the Hermitian-symmetric subspace for
/// small bases. Throws ConvergenceError when max_iterations is exhausted.
EigenSolution solve_lowest(const HamiltonianOperator& op, const SolverOptions& options);

/// Rescales each eigenvector by a unit phase so that psi(anchor) is real and
/// positive. Throws AnchorError when |psi(anchor)| <= 1e-8.
EigenSolution phase_normalize(const EigenSolution& solution, const Vec3& anchor);

} // namespace cuspwave

#endif
