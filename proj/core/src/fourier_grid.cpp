#include "cuspwave/fourier_grid.hpp"

#include <cmath>

#include "fftw_support.hpp"

namespace cuspwave {

namespace {

void check_grid(const FourierField& u, const Index3& grid) {
    const int M = u.basis().cutoff();
    for (int d = 0; d < 3; ++d) {
        if (grid[d] < 2 * M + 1) {
            throw DimensionError("grid too small for the field's cutoff");
        }
    }
}

inline int wrap(int k, int n) noexcept { return k >= 0 ? k : k + n; }

} // namespace

Vec3 grid_point(const Cell& cell, const Index3& grid, const Index3& j) noexcept {
    const double L = cell.edge();
    return cell.reduce({L * j[0] / grid[0], L * j[1] / grid[1], L * j[2] / grid[2]});
}

std::vector<Complex> synthesize_on_grid(const FourierField& u, const Index3& grid) {
    check_grid(u, grid);
    const auto [n1, n2, n3] = grid;
    const std::size_t total = static_cast<std::size_t>(n1) * n2 * n3;
    detail::FftwBuffer<Complex> cube(total);
    std::fill(cube.data(), cube.data() + total, Complex{0.0, 0.0});

    const double scale = 1.0 / std::sqrt(u.basis().cell().volume());
    const auto idx = u.basis().indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t pos =
            (static_cast<std::size_t>(wrap(idx[i][0], n1)) * n2 + wrap(idx[i][1], n2)) * n3 +
            wrap(idx[i][2], n3);
        cube.data()[pos] = u[i] * scale;
    }

    detail::FftwPlan plan;
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        plan = detail::FftwPlan(fftw_plan_dft_3d(n1, n2, n3, detail::as_fftw(cube.data()),
                                                 detail::as_fftw(cube.data()), FFTW_BACKWARD,
                                                 FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
    return std::vector<Complex>(cube.data(), cube.data() + total);
}

std::vector<double> synthesize_real_on_grid(const FourierField& u, const Index3& grid) {
    check_grid(u, grid);
    const auto [n1, n2, n3] = grid;
    const int h3 = n3 / 2 + 1;
    const std::size_t half_total = static_cast<std::size_t>(n1) * n2 * h3;
    const std::size_t total = static_cast<std::size_t>(n1) * n2 * n3;
    detail::FftwBuffer<Complex> half(half_total);
    detail::FftwBuffer<double> real(total);
    std::fill(half.data(), half.data() + half_total, Complex{0.0, 0.0});

    const double scale = 1.0 / std::sqrt(u.basis().cell().volume());
    const auto idx = u.basis().indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i][2] < 0) continue; // implicit conjugate half
        const std::size_t pos =
            (static_cast<std::size_t>(wrap(idx[i][0], n1)) * n2 + wrap(idx[i][1], n2)) * h3 +
            idx[i][2];
        half.data()[pos] = u[i] * scale;
    }

    detail::FftwPlan plan;
    {
        std::lock_guard<std::mutex> lock(detail::planner_mutex());
        plan = detail::FftwPlan(fftw_plan_dft_c2r_3d(n1, n2, n3, detail::as_fftw(half.data()),
                                                     real.data(), FFTW_ESTIMATE));
    }
    fftw_execute(plan.get());
    return std::vector<double>(real.data(), real.data() + total);
}

double grid_norm_squared(std::span<const Complex> samples, const Cell& cell) {
    double s = 0.0;
    for (const Complex& v : samples) s += std::norm(v);
    return s * cell.volume() / static_cast<double>(samples.size());
}

double grid_norm_squared(std::span<const double> samples, const Cell& cell) {
    double s = 0.0;
    for (double v : samples) s += v * v;
    return s * cell.volume() / static_cast<double>(samples.size());
}

} // namespace cuspwave
