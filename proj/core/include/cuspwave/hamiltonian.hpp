#ifndef CUSPWAVE_HAMILTONIAN_HPP
#define CUSPWAVE_HAMILTONIAN_HPP

#include <Eigen/Core>
#include <memory>

#include "cuspwave/lattice.hpp"
#include "cuspwave/potential.hpp"

namespace cuspwave {

/// Matrix-free H = -1/2 Laplacian + V_per + W_per on a CutoffBasis.
///
/// The kinetic part is a diagonal scaling by 1/2 |K|^2. The potential part is
/// applied by synthesizing the state on a padded FFT grid, multiplying by the
/// cached real-space potential samples, and transforming back. The grid is at
/// least 4M+1 points per dimension and the potential carries coefficients up
/// to wavenumber 2M, so the result is the exact Galerkin projection of H*u
/// onto the basis: no aliasing reaches the retained modes.
class HamiltonianOperator {
public:
    /// grid_override, when nonzero, replaces fft_grid_size(basis); each entry
    /// must be >= 4M+1.
    HamiltonianOperator(std::shared_ptr<const CutoffBasis> basis, const ChargeConfig& config,
                        const SmoothPotential& w = {}, Index3 grid_override = {0, 0, 0});
    ~HamiltonianOperator();

    HamiltonianOperator(HamiltonianOperator&&) noexcept;
    HamiltonianOperator& operator=(HamiltonianOperator&&) noexcept;
    HamiltonianOperator(const HamiltonianOperator&) = delete;
    HamiltonianOperator& operator=(const HamiltonianOperator&) = delete;

    const CutoffBasis& basis() const noexcept;
    const std::shared_ptr<const CutoffBasis>& basis_ptr() const noexcept;
    Index3 grid() const noexcept;
    /// Kinetic energies 1/2 |K|^2 aligned with the basis indices.
    std::span<const double> kinetic() const noexcept;
    /// Assembled V_per + W_per coefficients up to wavenumber 2M.
    const FourierField& potential_field() const noexcept;

    /// Scratch buffers for one concurrent apply stream. Distinct workspaces
    /// may be used from distinct threads; the operator itself is read-only
    /// after construction.
    class Workspace {
    public:
        ~Workspace();
        Workspace(Workspace&&) noexcept;
        Workspace& operator=(Workspace&&) noexcept;
        Workspace(const Workspace&) = delete;
        Workspace& operator=(const Workspace&) = delete;

    private:
        friend class HamiltonianOperator;
        Workspace();
        struct Impl;
        std::unique_ptr<Impl> impl_;
    };
    Workspace make_workspace() const;

    /// out = projection of H*u onto the basis. Hermitian-symmetric inputs use
    /// half-spectrum real transforms; general fields use complex transforms.
    void apply(const FourierField& u, FourierField& out, Workspace& ws) const;
    FourierField apply(const FourierField& u) const;

    /// Potential part only (kinetic excluded), same projection.
    void apply_potential(const FourierField& u, FourierField& out, Workspace& ws) const;

    /// Full Galerkin matrix H(i,j) = 1/2|K_i|^2 delta_ij + pot(k_i - k_j)/|cell|^{1/2}.
    /// Oracle-scale only: throws DomainError above 20000 basis functions.
    Eigen::MatrixXcd dense_matrix() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace cuspwave

#endif
