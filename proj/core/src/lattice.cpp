#include "cuspwave/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace cuspwave {

Cell::Cell(double edge) : edge_(edge) {
    if (!(edge > 0.0)) {
        throw DomainError("cell edge must be positive");
    }
    volume_ = edge * edge * edge;
    recip_ = 2.0 * M_PI / edge;
}

Vec3 Cell::reduce(const Vec3& x) const noexcept {
    Vec3 r;
    for (int d = 0; d < 3; ++d) {
        r[d] = x[d] - edge_ * std::round(x[d] / edge_);
        if (r[d] >= 0.5 * edge_) r[d] -= edge_; // round-half ties land on +L/2
    }
    return r;
}

const char* to_string(CutoffShape shape) noexcept {
    return shape == CutoffShape::Spherical ? "spherical" : "cubic";
}

int smooth235_at_least(int n) {
    if (n < 1) return 1;
    for (int c = n;; ++c) {
        int m = c;
        for (int p : {2, 3, 5}) {
            while (m % p == 0) m /= p;
        }
        if (m == 1) return c;
    }
}

CutoffBasis::CutoffBasis(Cell cell, int cutoff, CutoffShape shape)
    : cell_(cell), cutoff_(cutoff), shape_(shape) {
    if (cutoff < 1) {
        throw DomainError("cutoff M must be >= 1");
    }
    const int M = cutoff;
    const long M2 = static_cast<long>(M) * M;
    indices_.reserve(shape == CutoffShape::Cubic
                         ? static_cast<std::size_t>(2 * M + 1) * (2 * M + 1) * (2 * M + 1)
                         : static_cast<std::size_t>(4.19 * M2 * M) + 8);
    for (int k1 = -M; k1 <= M; ++k1) {
        for (int k2 = -M; k2 <= M; ++k2) {
            for (int k3 = -M; k3 <= M; ++k3) {
                if (shape == CutoffShape::Spherical &&
                    static_cast<long>(k1) * k1 + static_cast<long>(k2) * k2 +
                            static_cast<long>(k3) * k3 >
                        M2) {
                    continue;
                }
                indices_.push_back({k1, k2, k3});
            }
        }
    }
    // Loop order is lexicographic already.
    lookup_stride_ = 2 * M + 1;
    lookup_.assign(static_cast<std::size_t>(lookup_stride_) * lookup_stride_ * lookup_stride_, -1);
    for (std::size_t i = 0; i < indices_.size(); ++i) {
        lookup_[pack(indices_[i])] = static_cast<std::int64_t>(i);
    }
}

std::int64_t CutoffBasis::pack(const Index3& k) const noexcept {
    const std::int64_t s = lookup_stride_;
    return ((k[0] + cutoff_) * s + (k[1] + cutoff_)) * s + (k[2] + cutoff_);
}

std::size_t CutoffBasis::position_of(const Index3& k) const noexcept {
    for (int d = 0; d < 3; ++d) {
        if (k[d] < -cutoff_ || k[d] > cutoff_) return npos;
    }
    const std::int64_t p = lookup_[pack(k)];
    return p < 0 ? npos : static_cast<std::size_t>(p);
}

Vec3 CutoffBasis::wavevector(std::size_t i) const noexcept {
    const double g = cell_.reciprocal_step();
    const Index3& k = indices_[i];
    return {g * k[0], g * k[1], g * k[2]};
}

double CutoffBasis::squared_index_norm(std::size_t i) const noexcept {
    const Index3& k = indices_[i];
    return static_cast<double>(static_cast<long>(k[0]) * k[0] + static_cast<long>(k[1]) * k[1] +
                               static_cast<long>(k[2]) * k[2]);
}

CutoffBasis build_basis(const Cell& cell, int cutoff, CutoffShape shape) {
    return CutoffBasis(cell, cutoff, shape);
}

Index3 fft_grid_size(const CutoffBasis& basis) {
    const int n = smooth235_at_least(4 * basis.cutoff() + 1);
    return {n, n, n};
}

FourierField::FourierField(std::shared_ptr<const CutoffBasis> basis, bool hermitian)
    : basis_(std::move(basis)), coeffs_(basis_->size(), Complex{0.0, 0.0}), hermitian_(hermitian) {}

double FourierField::norm() const noexcept {
    double s = 0.0;
    for (const Complex& c : coeffs_) s += std::norm(c);
    return std::sqrt(s);
}

Complex inner_product(const FourierField& u, const FourierField& v) {
    if (u.size() != v.size() || !(u.basis().cell() == v.basis().cell())) {
        throw DimensionError("inner_product: fields live on different bases");
    }
    Complex s{0.0, 0.0};
    const auto uc = u.coeffs();
    const auto vc = v.coeffs();
    for (std::size_t i = 0; i < uc.size(); ++i) s += std::conj(uc[i]) * vc[i];
    return s;
}

double hermitian_asymmetry(const FourierField& u) noexcept {
    const auto c = u.coeffs();
    const std::size_t n = c.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        worst = std::max(worst, std::abs(c[n - 1 - i] - std::conj(c[i])));
    }
    return worst;
}

std::vector<Complex> evaluate_at_points(const FourierField& u, std::span<const Vec3> points) {
    const CutoffBasis& basis = u.basis();
    const Cell& cell = basis.cell();
    const int M = basis.cutoff();
    const double inv_sqrt_vol = 1.0 / std::sqrt(cell.volume());

    std::vector<Complex> out;
    out.reserve(points.size());
    // Phase tables e^{i k g x_d}, k = -M..M, built by recurrence per point.
    std::vector<Complex> table(static_cast<std::size_t>(3) * (2 * M + 1));
    auto row = [&](int d) { return table.data() + static_cast<std::size_t>(d) * (2 * M + 1) + M; };

    for (const Vec3& p : points) {
        const Vec3 x = cell.reduce(p);
        for (int d = 0; d < 3; ++d) {
            const double theta = cell.reciprocal_step() * x[d];
            const Complex step{std::cos(theta), std::sin(theta)};
            Complex* t = row(d);
            t[0] = Complex{1.0, 0.0};
            for (int k = 1; k <= M; ++k) {
                t[k] = t[k - 1] * step;
                t[-k] = std::conj(t[k]);
            }
        }
        const Complex* t0 = row(0);
        const Complex* t1 = row(1);
        const Complex* t2 = row(2);
        Complex acc{0.0, 0.0};
        const auto idx = basis.indices();
        const auto c = u.coeffs();
        for (std::size_t i = 0; i < c.size(); ++i) {
            acc += c[i] * (t0[idx[i][0]] * t1[idx[i][1]] * t2[idx[i][2]]);
        }
        out.push_back(acc * inv_sqrt_vol);
    }
    return out;
}

FourierField embed_into(const FourierField& u, std::shared_ptr<const CutoffBasis> target) {
    const CutoffBasis& src = u.basis();
    if (!(src.cell() == target->cell())) {
        throw DimensionError("embed_into: cells differ");
    }
    FourierField out(std::move(target), u.hermitian());
    const CutoffBasis& dst = out.basis();
    const auto idx = src.indices();
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t j = dst.position_of(idx[i]);
        if (j == CutoffBasis::npos) {
            throw DimensionError("embed_into: target basis does not contain source index");
        }
        out[j] = u[i];
    }
    return out;
}

FourierField random_real_field(std::shared_ptr<const CutoffBasis> basis, std::mt19937_64& rng) {
    FourierField f(std::move(basis), true);
    const CutoffBasis& b = f.basis();
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n = b.size();
    // Walk the first half; position n-1-i holds -k.
    for (std::size_t i = 0; i < n / 2; ++i) {
        const Complex c{gauss(rng) * M_SQRT1_2, gauss(rng) * M_SQRT1_2};
        f[i] = c;
        f[n - 1 - i] = std::conj(c);
    }
    f[n / 2] = Complex{gauss(rng), 0.0}; // k = 0 sits exactly in the middle
    return f;
}

} // namespace cuspwave
