#include "cuspwave/analysis.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

namespace cuspwave {

namespace {

// Upper incomplete gamma for integer and half-integer a (both signs), x > 0.
// Positive orders use the stable upward recurrence from Gamma(1,x) = e^-x or
// Gamma(1/2,x) = sqrt(pi) erfc(sqrt(x)); nonpositive orders recurse downward
// from Gamma(0,x) = E1(x) or Gamma(1/2,x). The downward cancellation is
// harmless here because every call has x >= pi, where the terms are already
// exponentially small.
double upper_gamma(double a, double x) {
    const double twice = 2.0 * a;
    const long n2 = std::lround(twice);
    const bool half = (n2 % 2) != 0;

    double base_order;
    double g;
    if (half) {
        base_order = 0.5;
        g = std::sqrt(M_PI) * std::erfc(std::sqrt(x));
    } else {
        base_order = a > 0.5 ? 1.0 : 0.0;
        g = base_order == 1.0 ? std::exp(-x) : -std::expint(-x); // Gamma(0,x) = E1(x)
    }

    if (a >= base_order) {
        double t = base_order;
        while (t < a - 0.25) {
            g = t * g + std::pow(x, t) * std::exp(-x);
            t += 1.0;
        }
    } else {
        double t = base_order;
        while (t > a + 0.25) {
            g = (g - std::pow(x, t - 1.0) * std::exp(-x)) / (t - 1.0);
            t -= 1.0;
        }
    }
    return g;
}

long double partial_lattice_sum(int cutoff, int exponent, CutoffShape shape) {
    const long M2 = static_cast<long>(cutoff) * cutoff;
    const double half_p = -0.5 * exponent;
    long double sum = 0.0L;
    for (int k1 = -cutoff; k1 <= cutoff; ++k1) {
        for (int k2 = -cutoff; k2 <= cutoff; ++k2) {
            for (int k3 = -cutoff; k3 <= cutoff; ++k3) {
                const long q = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2 +
                               static_cast<long>(k3) * k3;
                if (q == 0) continue;
                if (shape == CutoffShape::Spherical && q > M2) continue;
                sum += std::pow(static_cast<double>(q), half_p);
            }
        }
    }
    return sum;
}

} // namespace

double cubic_tail_constant() noexcept {
    return 1.0 / 3.0 + 2.5 * std::sqrt(2.0) * std::atan(1.0 / std::sqrt(2.0));
}

double spherical_tail_constant() noexcept { return 4.0 * M_PI / 3.0; }

CorrectionConstants CorrectionConstants::for_shape(CutoffShape shape, const Cell& cell) {
    const double l3 = cell.volume();
    if (shape == CutoffShape::Spherical) {
        return {shape, 2.0 * l3 / (3.0 * M_PI * M_PI * M_PI)};
    }
    return {shape, cubic_tail_constant() * l3 / (2.0 * M_PI * M_PI * M_PI * M_PI)};
}

double first_order_correction(const EigenSolution& solution, const ChargeConfig& config,
                              const CorrectionConstants& constants, int cutoff, int which) {
    const FourierField& psi = solution.eigenvectors.at(static_cast<std::size_t>(which));
    if (psi.basis().cutoff() != cutoff) {
        throw DimensionError("first_order_correction: cutoff does not match the solution basis");
    }
    std::vector<Vec3> nuclei;
    nuclei.reserve(config.charges().size());
    for (const PointCharge& c : config.charges()) nuclei.push_back(c.position);
    const std::vector<Complex> values = evaluate_at_points(psi, nuclei);

    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (std::abs(values[i].imag()) > 1e-6 * (1.0 + std::abs(values[i]))) {
            throw PhaseError("first_order_correction: eigenvector is not phase-normalized");
        }
        const double z = config.charges()[i].charge;
        const double p = values[i].real();
        sum += z * z * p * p;
    }
    const double m3 = static_cast<double>(cutoff) * cutoff * cutoff;
    return constants.prefactor / m3 * sum;
}

double lattice_sum(int exponent) {
    if (exponent <= 3) {
        throw DomainError("lattice_sum: exponent must exceed 3 for a convergent sum");
    }
    const double s = 0.5 * exponent;
    // theta-function split: pi^-s Gamma(s) Z = sum_k' [Gamma(s,pi q)/ (pi q)^s
    //   + Gamma(3/2-s, pi q)/(pi q)^{3/2-s}] + 1/(s-3/2) - 1/s, q = |k|^2.
    constexpr int range = 8; // e^{-pi*64} tail, far below double precision
    long double acc = 0.0L;
    for (int k1 = -range; k1 <= range; ++k1) {
        for (int k2 = -range; k2 <= range; ++k2) {
            for (int k3 = -range; k3 <= range; ++k3) {
                const long q = static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2 +
                               static_cast<long>(k3) * k3;
                if (q == 0) continue;
                const double x = M_PI * static_cast<double>(q);
                acc += upper_gamma(s, x) * std::pow(x, -s);
                acc += upper_gamma(1.5 - s, x) * std::pow(x, s - 1.5);
            }
        }
    }
    acc += 1.0L / (s - 1.5) - 1.0L / s;
    return static_cast<double>(acc * std::pow(M_PI, s) / std::tgamma(s));
}

double tail_sum(int cutoff, int exponent, CutoffShape shape) {
    if (exponent <= 3) {
        throw DomainError("tail_sum: exponent must exceed 3 for a convergent tail");
    }
    if (cutoff < 1) {
        throw DomainError("tail_sum: cutoff must be >= 1");
    }
    const long double full = lattice_sum(exponent);
    const long double part = partial_lattice_sum(cutoff, exponent, shape);
    return static_cast<double>(full - part);
}

std::vector<double> fourier_tail_profile(const EigenSolution& solution,
                                         const ChargeConfig& config,
                                         std::span<const std::pair<double, double>> shells,
                                         int which) {
    const FourierField& psi = solution.eigenvectors.at(static_cast<std::size_t>(which));
    const CutoffBasis& basis = psi.basis();
    const Cell& cell = basis.cell();
    const double g = cell.reciprocal_step();
    const double sqrt_vol = std::sqrt(cell.volume());

    std::vector<Vec3> nuclei;
    for (const PointCharge& c : config.charges()) nuclei.push_back(c.position);
    std::vector<Complex> values = evaluate_at_points(psi, nuclei);

    // psi^M(R_I) is biased low by the truncated tail, and the bias (~2% at
    // M = 40) would floor every shell residual. The tail law itself gives the
    // missing part: psi(R_I) = psi^M(R_I) + (8 pi Z_I / |cell|) (L/2pi)^4
    // t4(M) psi(R_I) + cross terms that decay one order faster. Solve for
    // psi(R_I), dropping the cross terms.
    {
        const double t4 = tail_sum(basis.cutoff(), 4, basis.shape());
        const double geom = std::pow(cell.edge() / (2.0 * M_PI), 4) / cell.volume() * 8.0 * M_PI;
        for (std::size_t a = 0; a < values.size(); ++a) {
            const double factor = 1.0 - geom * config.charges()[a].charge * t4;
            if (factor > 0.5) values[a] /= factor;
        }
    }

    std::vector<double> out;
    out.reserve(shells.size());
    for (const auto& [lo, hi] : shells) {
        double num = 0.0;
        double den = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < basis.size(); ++i) {
            const double r = std::sqrt(basis.squared_index_norm(i));
            if (!(r > lo && r <= hi)) continue;
            const Index3& k = basis.index(i);
            const double kk = g * g * basis.squared_index_norm(i);
            Complex pred{0.0, 0.0};
            for (std::size_t a = 0; a < nuclei.size(); ++a) {
                const double phase = -g * (k[0] * nuclei[a][0] + k[1] * nuclei[a][1] +
                                           k[2] * nuclei[a][2]);
                pred += config.charges()[a].charge * values[a].real() *
                        Complex{std::cos(phase), std::sin(phase)};
            }
            pred *= 8.0 * M_PI / (sqrt_vol * kk * kk);
            num += std::norm(psi[i] - pred);
            den += std::norm(pred);
            ++count;
        }
        if (count == 0) {
            throw DomainError("fourier_tail_profile: empty shell");
        }
        out.push_back(std::sqrt(num / den));
    }
    return out;
}

std::pair<double, double> error_identity_check(const EigenSolution& solution_m,
                                               const EigenSolution& solution_ref,
                                               const HamiltonianOperator& op_ref, int which) {
    const FourierField& psi_m = solution_m.eigenvectors.at(static_cast<std::size_t>(which));
    const FourierField& psi_ref = solution_ref.eigenvectors.at(static_cast<std::size_t>(which));
    const CutoffBasis& small = psi_m.basis();
    const CutoffBasis& big = psi_ref.basis();
    if (!(small.cell() == big.cell()) || small.shape() != big.shape() ||
        small.cutoff() > big.cutoff() || !(big.cell() == op_ref.basis().cell()) ||
        big.cutoff() != op_ref.basis().cutoff()) {
        throw ConfigError("error_identity_check: mismatched configurations");
    }

    const double lhs = solution_m.eigenvalues.at(static_cast<std::size_t>(which)) -
                       solution_ref.eigenvalues.at(static_cast<std::size_t>(which));
    if (small.cutoff() == big.cutoff()) {
        return {lhs, 0.0};
    }

    FourierField psi_m_big = embed_into(psi_m, op_ref.basis_ptr());

    // Align the relative sign: the identity assumes <psi^M, psi_ref> ~ +1.
    const double overlap = std::real(inner_product(psi_m_big, psi_ref));
    const double sign = overlap < 0.0 ? -1.0 : 1.0;

    // g = (I - P_M) psi_ref: zero every coefficient inside the small cutoff.
    FourierField tail(op_ref.basis_ptr(), true);
    const auto idx = big.indices();
    for (std::size_t i = 0; i < big.size(); ++i) {
        tail[i] = small.contains(idx[i]) ? Complex{0.0, 0.0} : psi_ref[i];
    }

    auto ws = op_ref.make_workspace();
    FourierField v_tail(op_ref.basis_ptr(), true);
    op_ref.apply_potential(tail, v_tail, ws);
    const double rhs = -sign * std::real(inner_product(psi_m_big, v_tail));
    return {lhs, rhs};
}

std::vector<CancellationRow> cancellation_metrics(std::span<const ConvergenceRecord> run1,
                                                  std::span<const ConvergenceRecord> run2) {
    if (run1.size() != run2.size()) {
        throw DomainError("cancellation_metrics: runs have different cutoff grids");
    }
    std::vector<CancellationRow> rows;
    rows.reserve(run1.size());
    for (std::size_t i = 0; i < run1.size(); ++i) {
        if (run1[i].cutoff != run2[i].cutoff) {
            throw DomainError("cancellation_metrics: runs have different cutoff grids");
        }
        CancellationRow row;
        row.cutoff = run1[i].cutoff;
        row.difference_error = std::abs((run1[i].energy - run2[i].energy) -
                                        (run1[i].reference_energy - run2[i].reference_energy));
        row.total_error = std::abs(run1[i].raw_error) + std::abs(run2[i].raw_error);
        rows.push_back(row);
    }
    return rows;
}

RichardsonFit richardson_reference(std::span<const std::pair<int, double>> pairs, double rate) {
    if (pairs.size() < 3) {
        throw DomainError("richardson_reference: need at least 3 cutoffs");
    }
    for (std::size_t i = 1; i < pairs.size(); ++i) {
        if (pairs[i].first <= pairs[i - 1].first) {
            throw DomainError("richardson_reference: cutoffs must be ascending and distinct");
        }
    }
    const std::size_t fit_count = (pairs.size() + 1) / 2;
    const std::size_t first = pairs.size() - fit_count;

    Eigen::MatrixXd a(static_cast<Eigen::Index>(fit_count), 2);
    Eigen::VectorXd b(static_cast<Eigen::Index>(fit_count));
    for (std::size_t i = 0; i < fit_count; ++i) {
        const auto& [m, e] = pairs[first + i];
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        a(static_cast<Eigen::Index>(i), 1) = std::pow(static_cast<double>(m), -rate);
        b(static_cast<Eigen::Index>(i)) = e;
    }
    const Eigen::Vector2d coef = a.colPivHouseholderQr().solve(b);
    return {coef(0), coef(1)};
}

double slope_fit(std::span<const std::pair<double, double>> pairs) {
    if (pairs.size() < 3) {
        throw DomainError("slope_fit: need at least 3 points");
    }
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [m, err] : pairs) {
        if (!(err > 0.0) || !(m > 0.0)) {
            throw DomainError("slope_fit: values must be positive");
        }
        const double x = std::log(m);
        const double y = std::log(err);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(pairs.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

} // namespace cuspwave
