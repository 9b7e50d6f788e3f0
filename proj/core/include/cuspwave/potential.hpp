#ifndef CUSPWAVE_POTENTIAL_HPP
#define CUSPWAVE_POTENTIAL_HPP

#include <map>
#include <vector>

#include "cuspwave/lattice.hpp"

namespace cuspwave {

struct PointCharge {
    double charge;  // Z_I > 0
    Vec3 position;  // R_I, reduced into the cell on construction
};

/// Point charges in a cell. Positions are reduced to [-L/2, L/2)^3 and must be
/// pairwise distinct modulo the lattice.
class ChargeConfig {
public:
    ChargeConfig(Cell cell, std::vector<PointCharge> charges);

    const Cell& cell() const noexcept { return cell_; }
    const std::vector<PointCharge>& charges() const noexcept { return charges_; }

private:
    Cell cell_;
    std::vector<PointCharge> charges_;
};

/// Finite Fourier series for the smooth periodic potential W_per. Coefficients
/// are stored in the orthonormal convention (W = sum w_hat_k e_K) and kept
/// Hermitian-symmetric: setting k also sets conj at -k.
class SmoothPotential {
public:
    SmoothPotential() = default;

    /// Adds amplitude*cos(K.x) for k != 0, or the constant amplitude for k = 0.
    void add_cosine(const Index3& k, double amplitude, const Cell& cell);

    /// Sets w_hat(k) and w_hat(-k) = conj(w_hat(k)). k = 0 must be real.
    void set_coefficient(const Index3& k, Complex w);

    Complex coefficient(const Index3& k) const noexcept;
    const std::map<Index3, Complex>& terms() const noexcept { return terms_; }
    bool empty() const noexcept { return terms_.empty(); }

private:
    std::map<Index3, Complex> terms_;
};

/// Fourier coefficient of the periodic Coulomb potential with neutralizing
/// background, in the plain-exponential convention V(x) = sum V_hat_K e^{iK.x}:
///   V_hat_0 = 0,
///   V_hat_K = -(4*pi/|cell|) * sum_I Z_I e^{-i K.R_I} / |K|^2   (k != 0),
/// the attractive sign (-Z/|x| wells at the nuclei).
Complex coulomb_coefficient(const ChargeConfig& config, const Index3& k);

/// Total potential V_per + W_per as a FourierField over the index set of the
/// given shape and cutoff. Stored in the orthonormal convention, so the
/// Coulomb part enters as |cell|^{1/2} * coulomb_coefficient and the Galerkin
/// matrix element between e_K and e_K' is coeff(k-k') / |cell|^{1/2}.
FourierField assemble_potential_field(const ChargeConfig& config, const SmoothPotential& w,
                                      int max_wavenumber, CutoffShape shape);

} // namespace cuspwave

#endif
