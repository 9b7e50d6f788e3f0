#include "cuspwave/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <mutex>

#include "fftw_support.hpp"

namespace cuspwave {

namespace {

inline int wrap(int k, int n) noexcept { return k >= 0 ? k : k + n; }

bool same_basis(const CutoffBasis& a, const CutoffBasis& b) noexcept {
    return a.cell() == b.cell() && a.cutoff() == b.cutoff() && a.shape() == b.shape() &&
           a.size() == b.size();
}

} // namespace

struct HamiltonianOperator::Workspace::Impl {
    detail::FftwBuffer<double> real;   // N1*N2*N3
    detail::FftwBuffer<Complex> half;  // N1*N2*(N3/2+1)
    detail::FftwBuffer<Complex> cube;  // N1*N2*N3, allocated on first non-Hermitian use
    std::size_t real_size = 0;
    std::size_t half_size = 0;
    std::size_t cube_size = 0;
};

HamiltonianOperator::Workspace::Workspace() : impl_(std::make_unique<Impl>()) {}
HamiltonianOperator::Workspace::~Workspace() = default;
HamiltonianOperator::Workspace::Workspace(Workspace&&) noexcept = default;
HamiltonianOperator::Workspace& HamiltonianOperator::Workspace::operator=(Workspace&&) noexcept =
    default;

struct HamiltonianOperator::Impl {
    std::shared_ptr<const CutoffBasis> basis;
    Index3 grid{};
    std::vector<double> kinetic;
    FourierField potential;
    std::vector<double> potential_samples; // real-space, N1*N2*N3

    // Hermitian path tables: write positions into the half cube (k3 >= 0 only)
    // and read positions with a conjugation flag for every basis index.
    std::vector<std::pair<std::uint32_t, std::size_t>> scatter_half;
    std::vector<std::size_t> gather_pos;
    std::vector<unsigned char> gather_conj;
    // General path: full-cube positions per basis index.
    std::vector<std::size_t> cube_pos;

    detail::FftwPlan plan_c2r;
    detail::FftwPlan plan_r2c;
    mutable detail::FftwPlan plan_bwd; // in-place c2c, lazily created
    mutable detail::FftwPlan plan_fwd;
    mutable std::mutex lazy_mutex;

    mutable Workspace own_ws{};
    mutable std::mutex own_ws_mutex;

    Impl(std::shared_ptr<const CutoffBasis> b, FourierField pot)
        : basis(std::move(b)), potential(std::move(pot)) {}

    std::size_t real_total() const noexcept {
        return static_cast<std::size_t>(grid[0]) * grid[1] * grid[2];
    }
    std::size_t half_total() const noexcept {
        return static_cast<std::size_t>(grid[0]) * grid[1] * (grid[2] / 2 + 1);
    }

    void init_workspace_buffers(Workspace& ws) const {
        auto& w = *ws.impl_;
        if (w.real_size != real_total()) {
            w.real = detail::FftwBuffer<double>(real_total());
            w.real_size = real_total();
        }
        if (w.half_size != half_total()) {
            w.half = detail::FftwBuffer<Complex>(half_total());
            w.half_size = half_total();
        }
    }

    void ensure_cube(Workspace& ws) const {
        auto& w = *ws.impl_;
        if (w.cube_size != real_total()) {
            w.cube = detail::FftwBuffer<Complex>(real_total());
            w.cube_size = real_total();
        }
        std::lock_guard<std::mutex> lock(lazy_mutex);
        if (!plan_fwd) {
            std::lock_guard<std::mutex> plock(detail::planner_mutex());
            fftw_complex* c = detail::as_fftw(w.cube.data());
            plan_bwd = detail::FftwPlan(
                fftw_plan_dft_3d(grid[0], grid[1], grid[2], c, c, FFTW_BACKWARD, FFTW_ESTIMATE));
            plan_fwd = detail::FftwPlan(
                fftw_plan_dft_3d(grid[0], grid[1], grid[2], c, c, FFTW_FORWARD, FFTW_ESTIMATE));
        }
    }

    // Shared tail of both paths: multiply real-space samples by the potential.
    void multiply_potential_real(double* samples) const noexcept {
        const double* v = potential_samples.data();
        const std::size_t n = real_total();
        for (std::size_t j = 0; j < n; ++j) samples[j] *= v[j];
    }

    void apply_impl(const FourierField& u, FourierField& out, Workspace& ws,
                    bool include_kinetic) const {
        if (!same_basis(u.basis(), *basis) || !same_basis(out.basis(), *basis)) {
            throw DimensionError("apply: field basis does not match the operator basis");
        }
        init_workspace_buffers(ws);
        const double sqrt_vol = std::sqrt(basis->cell().volume());
        const double inv_n3 = 1.0 / static_cast<double>(real_total());
        const std::size_t n = basis->size();

        if (u.hermitian()) {
            auto& w = *ws.impl_;
            Complex* half = w.half.data();
            std::memset(half, 0, sizeof(Complex) * half_total());
            const double s = 1.0 / sqrt_vol;
            for (const auto& [ci, pos] : scatter_half) half[pos] = u[ci] * s;
            fftw_execute_dft_c2r(plan_c2r.get(), detail::as_fftw(half), w.real.data());
            multiply_potential_real(w.real.data());
            fftw_execute_dft_r2c(plan_r2c.get(), w.real.data(), detail::as_fftw(half));
            const double scale = sqrt_vol * inv_n3;
            for (std::size_t i = 0; i < n; ++i) {
                const Complex c = half[gather_pos[i]];
                out[i] = scale * (gather_conj[i] ? std::conj(c) : c);
            }
            out.set_hermitian(true);
        } else {
            ensure_cube(ws);
            auto& w = *ws.impl_;
            Complex* cube = w.cube.data();
            std::memset(cube, 0, sizeof(Complex) * real_total());
            const double s = 1.0 / sqrt_vol;
            for (std::size_t i = 0; i < n; ++i) cube[cube_pos[i]] = u[i] * s;
            fftw_execute_dft(plan_bwd.get(), detail::as_fftw(cube), detail::as_fftw(cube));
            {
                const double* v = potential_samples.data();
                const std::size_t total = real_total();
                for (std::size_t j = 0; j < total; ++j) cube[j] *= v[j];
            }
            fftw_execute_dft(plan_fwd.get(), detail::as_fftw(cube), detail::as_fftw(cube));
            const double scale = sqrt_vol * inv_n3;
            for (std::size_t i = 0; i < n; ++i) out[i] = scale * cube[cube_pos[i]];
            out.set_hermitian(false);
        }

        if (include_kinetic) {
            for (std::size_t i = 0; i < n; ++i) out[i] += kinetic[i] * u[i];
        }
    }
};

HamiltonianOperator::HamiltonianOperator(std::shared_ptr<const CutoffBasis> basis,
                                         const ChargeConfig& config, const SmoothPotential& w,
                                         Index3 grid_override) {
    if (!(basis->cell() == config.cell())) {
        throw DimensionError("operator: basis cell and charge-config cell differ");
    }
    const int M = basis->cutoff();
    FourierField pot = assemble_potential_field(config, w, 2 * M, basis->shape());
    impl_ = std::make_unique<Impl>(basis, std::move(pot));
    Impl& d = *impl_;

    d.grid = grid_override == Index3{0, 0, 0} ? fft_grid_size(*basis) : grid_override;
    for (int dim = 0; dim < 3; ++dim) {
        if (d.grid[dim] < 4 * M + 1) {
            throw DomainError("operator grid must be at least 4M+1 per dimension");
        }
    }

    const std::size_t n = basis->size();
    const double g = basis->cell().reciprocal_step();
    d.kinetic.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        d.kinetic[i] = 0.5 * g * g * basis->squared_index_norm(i);
    }

    const auto [n1, n2, n3] = d.grid;
    const int h3 = n3 / 2 + 1;
    d.gather_pos.resize(n);
    d.gather_conj.resize(n);
    d.cube_pos.resize(n);
    d.scatter_half.reserve(n / 2 + 1);
    const auto idx = basis->indices();
    for (std::size_t i = 0; i < n; ++i) {
        const Index3& k = idx[i];
        d.cube_pos[i] =
            (static_cast<std::size_t>(wrap(k[0], n1)) * n2 + wrap(k[1], n2)) * n3 + wrap(k[2], n3);
        if (k[2] >= 0) {
            const std::size_t hpos =
                (static_cast<std::size_t>(wrap(k[0], n1)) * n2 + wrap(k[1], n2)) * h3 + k[2];
            d.scatter_half.emplace_back(static_cast<std::uint32_t>(i), hpos);
            d.gather_pos[i] = hpos;
            d.gather_conj[i] = 0;
        } else {
            const std::size_t hpos =
                (static_cast<std::size_t>(wrap(-k[0], n1)) * n2 + wrap(-k[1], n2)) * h3 + (-k[2]);
            d.gather_pos[i] = hpos;
            d.gather_conj[i] = 1;
        }
    }

    // Plans are created on the operator's own workspace buffers; other
    // workspaces reuse them through the new-array execute interface (all
    // buffers share fftw_malloc alignment).
    d.init_workspace_buffers(d.own_ws);
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        auto& w = *d.own_ws.impl_;
        d.plan_c2r = detail::FftwPlan(fftw_plan_dft_c2r_3d(
            n1, n2, n3, detail::as_fftw(w.half.data()), w.real.data(), FFTW_ESTIMATE));
        d.plan_r2c = detail::FftwPlan(fftw_plan_dft_r2c_3d(
            n1, n2, n3, w.real.data(), detail::as_fftw(w.half.data()), FFTW_ESTIMATE));
    }

    // Cache the real-space potential samples: one half-spectrum synthesis of
    // the assembled coefficients (plain convention, hence / sqrt(vol)).
    {
        auto& w = *d.own_ws.impl_;
        Complex* half = w.half.data();
        std::memset(half, 0, sizeof(Complex) * d.half_total());
        const FourierField& pf = d.potential;
        const double s = 1.0 / std::sqrt(basis->cell().volume());
        const auto pidx = pf.basis().indices();
        for (std::size_t i = 0; i < pidx.size(); ++i) {
            const Index3& k = pidx[i];
            if (k[2] < 0) continue;
            const std::size_t pos =
                (static_cast<std::size_t>(wrap(k[0], n1)) * n2 + wrap(k[1], n2)) * h3 + k[2];
            half[pos] = pf[i] * s;
        }
        fftw_execute(d.plan_c2r.get());
        d.potential_samples.assign(w.real.data(), w.real.data() + d.real_total());
    }
}

HamiltonianOperator::~HamiltonianOperator() = default;
HamiltonianOperator::HamiltonianOperator(HamiltonianOperator&&) noexcept = default;
HamiltonianOperator& HamiltonianOperator::operator=(HamiltonianOperator&&) noexcept = default;

const CutoffBasis& HamiltonianOperator::basis() const noexcept { return *impl_->basis; }
const std::shared_ptr<const CutoffBasis>& HamiltonianOperator::basis_ptr() const noexcept {
    return impl_->basis;
}
Index3 HamiltonianOperator::grid() const noexcept { return impl_->grid; }
std::span<const double> HamiltonianOperator::kinetic() const noexcept { return impl_->kinetic; }
const FourierField& HamiltonianOperator::potential_field() const noexcept {
    return impl_->potential;
}

HamiltonianOperator::Workspace HamiltonianOperator::make_workspace() const {
    Workspace ws;
    impl_->init_workspace_buffers(ws);
    return ws;
}

void HamiltonianOperator::apply(const FourierField& u, FourierField& out, Workspace& ws) const {
    impl_->apply_impl(u, out, ws, true);
}

FourierField HamiltonianOperator::apply(const FourierField& u) const {
    FourierField out(impl_->basis, u.hermitian());
    std::lock_guard<std::mutex> lock(impl_->own_ws_mutex);
    impl_->apply_impl(u, out, impl_->own_ws, true);
    return out;
}

void HamiltonianOperator::apply_potential(const FourierField& u, FourierField& out,
                                          Workspace& ws) const {
    impl_->apply_impl(u, out, ws, false);
}

Eigen::MatrixXcd HamiltonianOperator::dense_matrix() const {
    const Impl& d = *impl_;
    const std::size_t n = d.basis->size();
    if (n > 20000) {
        throw DomainError("dense_matrix: basis too large for the dense oracle (limit 20000)");
    }
    const double inv_sqrt_vol = 1.0 / std::sqrt(d.basis->cell().volume());
    const CutoffBasis& pbasis = d.potential.basis();
    Eigen::MatrixXcd h(n, n);
    const auto idx = d.basis->indices();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < n; ++i) {
            const Index3 diff{idx[i][0] - idx[j][0], idx[i][1] - idx[j][1],
                              idx[i][2] - idx[j][2]};
            const std::size_t p = pbasis.position_of(diff);
            Complex v = p == CutoffBasis::npos ? Complex{0.0, 0.0}
                                               : d.potential[p] * inv_sqrt_vol;
            if (i == j) v += d.kinetic[i];
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    return h;
}

} // namespace cuspwave
