#include "cuspwave/potential.hpp"

#include <cmath>

namespace cuspwave {

namespace {

Index3 negate(const Index3& k) { return {-k[0], -k[1], -k[2]}; }

} // namespace

ChargeConfig::ChargeConfig(Cell cell, std::vector<PointCharge> charges)
    : cell_(cell), charges_(std::move(charges)) {
    for (PointCharge& c : charges_) {
        if (!(c.charge > 0.0)) {
            throw DomainError("point charges must have Z > 0");
        }
        c.position = cell_.reduce(c.position);
    }
    for (std::size_t i = 0; i < charges_.size(); ++i) {
        for (std::size_t j = i + 1; j < charges_.size(); ++j) {
            const Vec3 d = cell_.reduce({charges_[i].position[0] - charges_[j].position[0],
                                         charges_[i].position[1] - charges_[j].position[1],
                                         charges_[i].position[2] - charges_[j].position[2]});
            if (d[0] * d[0] + d[1] * d[1] + d[2] * d[2] == 0.0) {
                throw DomainError("degenerate configuration: coincident charge positions");
            }
        }
    }
}

void SmoothPotential::add_cosine(const Index3& k, double amplitude, const Cell& cell) {
    const double sq = std::sqrt(cell.volume());
    if (k == Index3{0, 0, 0}) {
        terms_[k] += Complex{amplitude * sq, 0.0};
        return;
    }
    terms_[k] += Complex{0.5 * amplitude * sq, 0.0};
    terms_[negate(k)] += Complex{0.5 * amplitude * sq, 0.0};
}

void SmoothPotential::set_coefficient(const Index3& k, Complex w) {
    if (k == Index3{0, 0, 0}) {
        if (w.imag() != 0.0) {
            throw DomainError("smooth potential: w_hat(0) must be real");
        }
        terms_[k] = w;
        return;
    }
    terms_[k] = w;
    terms_[negate(k)] = std::conj(w);
}

Complex SmoothPotential::coefficient(const Index3& k) const noexcept {
    const auto it = terms_.find(k);
    return it == terms_.end() ? Complex{0.0, 0.0} : it->second;
}

Complex coulomb_coefficient(const ChargeConfig& config, const Index3& k) {
    if (k == Index3{0, 0, 0}) {
        return {0.0, 0.0}; // neutralizing background: zero mean
    }
    const Cell& cell = config.cell();
    const double g = cell.reciprocal_step();
    const double k2 = g * g *
                      (static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1] +
                       static_cast<double>(k[2]) * k[2]);
    Complex structure{0.0, 0.0};
    for (const PointCharge& c : config.charges()) {
        const double phase =
            -g * (k[0] * c.position[0] + k[1] * c.position[1] + k[2] * c.position[2]);
        structure += c.charge * Complex{std::cos(phase), std::sin(phase)};
    }
    return -(4.0 * M_PI / cell.volume()) / k2 * structure;
}

FourierField assemble_potential_field(const ChargeConfig& config, const SmoothPotential& w,
                                      int max_wavenumber, CutoffShape shape) {
    const Cell& cell = config.cell();
    auto basis = std::make_shared<const CutoffBasis>(cell, max_wavenumber, shape);
    FourierField field(basis, true);

    const int M = max_wavenumber;
    const double g = cell.reciprocal_step();
    const double sqrt_vol = std::sqrt(cell.volume());
    const double coulomb_scale = -4.0 * M_PI / cell.volume() * sqrt_vol;

    // Per-charge phase tables e^{-i g k R_d}, k = -M..M, one row per dimension.
    const std::size_t nat = config.charges().size();
    std::vector<Complex> tables(nat * 3 * (2 * M + 1));
    auto row = [&](std::size_t atom, int d) {
        return tables.data() + ((atom * 3 + d) * (2 * M + 1) + M);
    };
    for (std::size_t a = 0; a < nat; ++a) {
        for (int d = 0; d < 3; ++d) {
            const double theta = -g * config.charges()[a].position[d];
            const Complex step{std::cos(theta), std::sin(theta)};
            Complex* t = row(a, d);
            t[0] = Complex{1.0, 0.0};
            for (int k = 1; k <= M; ++k) {
                t[k] = t[k - 1] * step;
                t[-k] = std::conj(t[k]);
            }
        }
    }

    const auto idx = basis->indices();
    const std::size_t n = basis->size();
    // Fill the lexicographic first half, mirror the rest by conjugation so the
    // field is Hermitian-symmetric bit-for-bit.
    for (std::size_t i = 0; i <= n / 2; ++i) {
        const Index3& k = idx[i];
        Complex value = w.coefficient(k);
        const double q2 = static_cast<double>(k[0]) * k[0] + static_cast<double>(k[1]) * k[1] +
                          static_cast<double>(k[2]) * k[2];
        if (q2 > 0.0) {
            Complex structure{0.0, 0.0};
            for (std::size_t a = 0; a < nat; ++a) {
                structure += config.charges()[a].charge *
                             (row(a, 0)[k[0]] * row(a, 1)[k[1]] * row(a, 2)[k[2]]);
            }
            value += coulomb_scale / (g * g * q2) * structure;
        }
        field[i] = value;
        field[n - 1 - i] = std::conj(value);
    }
    return field;
}

} // namespace cuspwave
