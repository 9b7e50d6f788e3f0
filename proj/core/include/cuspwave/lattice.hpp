#ifndef CUSPWAVE_LATTICE_HPP
#define CUSPWAVE_LATTICE_HPP

#include <array>
#include <complex>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "cuspwave/errors.hpp"

namespace cuspwave {

using Complex = std::complex<double>;
using Vec3 = std::array<double, 3>;
using Index3 = std::array<int, 3>;

/// Cubic periodic cell [-L/2, L/2]^3 with lattice L*Z^3.
class Cell {
public:
    explicit Cell(double edge);

    double edge() const noexcept { return edge_; }
    double volume() const noexcept { return volume_; }
    /// Reciprocal lattice step 2*pi/L; wavevectors are K = reciprocal_step()*k.
    double reciprocal_step() const noexcept { return recip_; }

    /// Reduce a point into the fundamental cell [-L/2, L/2) componentwise.
    Vec3 reduce(const Vec3& x) const noexcept;

    friend bool operator==(const Cell& a, const Cell& b) noexcept {
        return a.edge_ == b.edge_;
    }

private:
    double edge_;
    double volume_;
    double recip_;
};

enum class CutoffShape { Spherical, Cubic };

const char* to_string(CutoffShape shape) noexcept;

/// Smallest integer >= n whose prime factors are all in {2, 3, 5}.
int smooth235_at_least(int n);

/// Reciprocal-lattice index set for a cutoff M: all k in Z^3 with |k| <= M
/// (Spherical) or |k|_inf <= M (Cubic), ordered lexicographically. The set is
/// closed under negation and always contains 0. Immutable once built.
class CutoffBasis {
public:
    CutoffBasis(Cell cell, int cutoff, CutoffShape shape);

    const Cell& cell() const noexcept { return cell_; }
    int cutoff() const noexcept { return cutoff_; }
    CutoffShape shape() const noexcept { return shape_; }

    std::size_t size() const noexcept { return indices_.size(); }
    std::span<const Index3> indices() const noexcept { return indices_; }
    const Index3& index(std::size_t i) const noexcept { return indices_[i]; }

    /// Position of k in the ordered index list, or npos if absent.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t position_of(const Index3& k) const noexcept;
    bool contains(const Index3& k) const noexcept { return position_of(k) != npos; }

    /// Position of -k given the position of k. Lexicographic order reverses
    /// under negation, so this is simply size()-1-i.
    std::size_t negation_of(std::size_t i) const noexcept { return indices_.size() - 1 - i; }

    /// Physical wavevector K = (2*pi/L) * k of the i-th index.
    Vec3 wavevector(std::size_t i) const noexcept;
    /// |k|^2 of the i-th index (integer lattice units).
    double squared_index_norm(std::size_t i) const noexcept;

private:
    Cell cell_;
    int cutoff_;
    CutoffShape shape_;
    std::vector<Index3> indices_;
    std::vector<std::int64_t> lookup_; // (2M+1)^3 cube of positions, -1 = absent
    int lookup_stride_;

    std::int64_t pack(const Index3& k) const noexcept;
};

CutoffBasis build_basis(const Cell& cell, int cutoff, CutoffShape shape);

/// Per-dimension FFT grid size for alias-free Galerkin products: the smallest
/// 2,3,5-smooth integer >= 4M+1, so that a potential carrying wavenumbers up
/// to 2M times a state band-limited to M projects exactly back onto the basis.
Index3 fft_grid_size(const CutoffBasis& basis);

/// Coefficient vector over a CutoffBasis. Entry i stores u_hat_K for
/// K = (2*pi/L)*k_i in the orthonormal convention
///     u(x) = sum_K u_hat_K e^{i K.x} / |cell|^{1/2},
/// so the L^2 norm of u is the Euclidean norm of the coefficients. The
/// `hermitian` flag marks fields representing real-valued functions
/// (coeff(-k) = conj(coeff(k))).
class FourierField {
public:
    explicit FourierField(std::shared_ptr<const CutoffBasis> basis, bool hermitian = true);

    const CutoffBasis& basis() const noexcept { return *basis_; }
    const std::shared_ptr<const CutoffBasis>& basis_ptr() const noexcept { return basis_; }

    std::size_t size() const noexcept { return coeffs_.size(); }
    std::span<Complex> coeffs() noexcept { return coeffs_; }
    std::span<const Complex> coeffs() const noexcept { return coeffs_; }
    Complex& operator[](std::size_t i) noexcept { return coeffs_[i]; }
    const Complex& operator[](std::size_t i) const noexcept { return coeffs_[i]; }

    bool hermitian() const noexcept { return hermitian_; }
    void set_hermitian(bool h) noexcept { hermitian_ = h; }

    double norm() const noexcept;

private:
    std::shared_ptr<const CutoffBasis> basis_;
    std::vector<Complex> coeffs_;
    bool hermitian_;
};

/// L^2 inner product <u, v> = sum conj(u_i) v_i. Throws DimensionError on
/// mismatched bases.
Complex inner_product(const FourierField& u, const FourierField& v);

/// Largest absolute deviation |coeff(-k) - conj(coeff(k))| over the basis.
double hermitian_asymmetry(const FourierField& u) noexcept;

/// u(x) at arbitrary points, reduced into the cell first. Uses per-dimension
/// phase tables, one complex multiply-add per coefficient.
std::vector<Complex> evaluate_at_points(const FourierField& u, std::span<const Vec3> points);

/// Zero-pad a field onto a larger basis of the same cell and shape.
/// Throws DimensionError if the target does not contain the source indices.
FourierField embed_into(const FourierField& u, std::shared_ptr<const CutoffBasis> target);

/// Random Hermitian-symmetric (real-function) field with unit-variance
/// independent coefficients; deterministic for a given generator state.
FourierField random_real_field(std::shared_ptr<const CutoffBasis> basis, std::mt19937_64& rng);

} // namespace cuspwave

#endif
