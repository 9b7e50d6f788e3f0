#ifndef CUSPWAVE_FOURIER_GRID_HPP
#define CUSPWAVE_FOURIER_GRID_HPP

#include <vector>

#include "cuspwave/lattice.hpp"

namespace cuspwave {

/// Real-space sample point x_j = L * j / N (mod the lattice) of a uniform
/// grid, linearized as (j1*N2 + j2)*N3 + j3.
Vec3 grid_point(const Cell& cell, const Index3& grid, const Index3& j) noexcept;

/// Values u(x_j) on the uniform grid via one zero-padded inverse FFT.
/// The grid must satisfy grid[d] >= 2M+1.
std::vector<Complex> synthesize_on_grid(const FourierField& u, const Index3& grid);

/// Same, for Hermitian-symmetric fields, returning real samples through a
/// half-spectrum transform.
std::vector<double> synthesize_real_on_grid(const FourierField& u, const Index3& grid);

/// Trapezoidal (exact for band-limited u) L^2 norm squared from grid samples:
/// sum |u(x_j)|^2 * |cell| / (N1*N2*N3).
double grid_norm_squared(std::span<const Complex> samples, const Cell& cell);
double grid_norm_squared(std::span<const double> samples, const Cell& cell);

} // namespace cuspwave

#endif
