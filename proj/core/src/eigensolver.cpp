#include "cuspwave/eigensolver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

namespace cuspwave {

namespace {

using Eigen::Index;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

SolverOptions resolve(const HamiltonianOperator& op, SolverOptions o) {
    if (o.n_eigenpairs < 1) throw DomainError("solver: n_eigenpairs must be >= 1");
    if (static_cast<std::size_t>(o.n_eigenpairs) > op.basis().size()) {
        throw DomainError("solver: more eigenpairs requested than basis functions");
    }
    if (o.block_size == 0) o.block_size = o.n_eigenpairs + 2;
    if (o.block_size < o.n_eigenpairs) {
        throw DomainError("solver: block_size must be >= n_eigenpairs");
    }
    o.block_size = static_cast<int>(
        std::min<std::size_t>(o.block_size, op.basis().size()));
    o.block_size = std::max(o.block_size, o.n_eigenpairs);
    if (!(o.residual_tol > 0.0)) throw DomainError("solver: residual_tol must be positive");
    if (o.max_iterations < 1) throw DomainError("solver: max_iterations must be >= 1");
    return o;
}

// ---- dense fallback -------------------------------------------------------
//
// The Hermitian-symmetric coefficient vectors form a real n-dimensional
// subspace spanned by the constant mode and cos/sin pairs. H restricted to it
// is a real symmetric matrix; diagonalizing there keeps every eigenvector
// exactly real-valued, degenerate clusters included.

struct RealParam {
    std::size_t n = 0;
    std::size_t pairs = 0;  // n/2; pair p couples positions (p, n-1-p)
    std::size_t center = 0; // position of k = 0
};

RealParam real_param(const CutoffBasis& basis) {
    RealParam rp;
    rp.n = basis.size();
    rp.pairs = rp.n / 2;
    rp.center = rp.n / 2;
    return rp;
}

// v_complex = U v_real with U the (sparse) cos/sin-to-plane-wave unitary.
void real_to_complex(const RealParam& rp, const VectorXd& vr, FourierField& out) {
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    for (std::size_t p = 0; p < rp.pairs; ++p) {
        const double c = vr[static_cast<Index>(2 * p)];
        const double s = vr[static_cast<Index>(2 * p + 1)];
        out[p] = Complex{c * inv_sqrt2, -s * inv_sqrt2};
        out[rp.n - 1 - p] = Complex{c * inv_sqrt2, s * inv_sqrt2};
    }
    out[rp.center] = Complex{vr[static_cast<Index>(2 * rp.pairs)], 0.0};
    out.set_hermitian(true);
}

MatrixXd real_matrix(const RealParam& rp, const MatrixXcd& h) {
    const Index n = static_cast<Index>(rp.n);
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    const Complex i_unit{0.0, 1.0};
    MatrixXcd b(n, n); // b = H * U
    for (std::size_t p = 0; p < rp.pairs; ++p) {
        const Index a = static_cast<Index>(p);
        const Index m = static_cast<Index>(rp.n - 1 - p);
        b.col(static_cast<Index>(2 * p)) = (h.col(a) + h.col(m)) * inv_sqrt2;
        b.col(static_cast<Index>(2 * p + 1)) = i_unit * (h.col(m) - h.col(a)) * inv_sqrt2;
    }
    b.col(n - 1) = h.col(static_cast<Index>(rp.center));

    MatrixXd hr(n, n); // hr = Re(U^dagger b)
    for (std::size_t p = 0; p < rp.pairs; ++p) {
        const Index a = static_cast<Index>(p);
        const Index m = static_cast<Index>(rp.n - 1 - p);
        hr.row(static_cast<Index>(2 * p)) =
            ((b.row(a) + b.row(m)) * inv_sqrt2).real();
        hr.row(static_cast<Index>(2 * p + 1)) =
            ((i_unit * (b.row(a) - b.row(m))) * inv_sqrt2).real();
    }
    hr.row(n - 1) = b.row(static_cast<Index>(rp.center)).real();
    return hr;
}

EigenSolution solve_dense(const HamiltonianOperator& op, const SolverOptions& o) {
    const RealParam rp = real_param(op.basis());
    const MatrixXd hr = real_matrix(rp, op.dense_matrix());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(hr);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("dense diagonalization failed", {});
    }

    EigenSolution sol;
    sol.dense_path = true;
    auto ws = op.make_workspace();
    FourierField hv(op.basis_ptr(), true);
    for (int i = 0; i < o.n_eigenpairs; ++i) {
        FourierField v(op.basis_ptr(), true);
        real_to_complex(rp, es.eigenvectors().col(i), v);
        const double e = es.eigenvalues()(i);
        op.apply(v, hv, ws);
        double r2 = 0.0;
        for (std::size_t j = 0; j < v.size(); ++j) r2 += std::norm(hv[j] - e * v[j]);
        sol.eigenvalues.push_back(e);
        sol.residuals.push_back(std::sqrt(r2));
        sol.eigenvectors.push_back(std::move(v));
    }
    return sol;
}

// ---- LOBPCG ---------------------------------------------------------------

class BlockOperator {
public:
    explicit BlockOperator(const HamiltonianOperator& op)
        : op_(op), ws_(op.make_workspace()), in_(op.basis_ptr(), true),
          out_(op.basis_ptr(), true) {}

    void apply_columns(const MatrixXcd& x, MatrixXcd& hx, Index first, Index count) {
        const std::size_t n = op_.basis().size();
        for (Index c = first; c < first + count; ++c) {
            std::copy_n(x.col(c).data(), n, in_.coeffs().data());
            op_.apply(in_, out_, ws_);
            std::copy_n(out_.coeffs().data(), n, hx.col(c).data());
        }
    }

private:
    const HamiltonianOperator& op_;
    HamiltonianOperator::Workspace ws_;
    FourierField in_, out_;
};

// Orthonormalize columns of s (and co-transform hs) against the metric I via
// the eigendecomposition of the Gram matrix, dropping near-null directions.
Index orthonormalize(MatrixXcd& s, MatrixXcd& hs) {
    const MatrixXd g = (s.adjoint() * s).real();
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(g);
    const VectorXd& d = es.eigenvalues();
    const double dmax = std::max(d.maxCoeff(), 0.0);
    const double drop = dmax * 1e-12;
    Index kept = 0;
    MatrixXd t(g.rows(), g.cols());
    for (Index j = 0; j < d.size(); ++j) {
        if (d(j) > drop) {
            t.col(kept) = es.eigenvectors().col(j) / std::sqrt(d(j));
            ++kept;
        }
    }
    t.conservativeResize(Eigen::NoChange, kept);
    s = s * t;
    hs = hs * t;
    return kept;
}

double lanczos_shift_estimate(const HamiltonianOperator& op) {
    // 3-step Lanczos from the constant mode; sigma = max(1, |theta_min|).
    const std::size_t n = op.basis().size();
    auto basis = op.basis_ptr();
    auto ws = op.make_workspace();
    FourierField v(basis, true), hv(basis, true), prev(basis, true);
    v[n / 2] = Complex{1.0, 0.0};

    constexpr int steps = 3;
    double alpha[steps] = {0, 0, 0};
    double beta[steps] = {0, 0, 0};
    int m = 0;
    double beta_prev = 0.0;
    for (int j = 0; j < steps; ++j) {
        op.apply(v, hv, ws);
        const double a = std::real(inner_product(v, hv));
        alpha[j] = a;
        m = j + 1;
        if (j == steps - 1) break;
        for (std::size_t i = 0; i < n; ++i) {
            hv[i] -= a * v[i] + beta_prev * prev[i];
        }
        const double b = hv.norm();
        if (b < 1e-12 * (std::abs(a) + 1.0)) break;
        beta[j] = b;
        prev = v;
        for (std::size_t i = 0; i < n; ++i) v[i] = hv[i] / b;
        beta_prev = b;
    }
    MatrixXd t = MatrixXd::Zero(m, m);
    for (int j = 0; j < m; ++j) {
        t(j, j) = alpha[j];
        if (j + 1 < m) t(j, j + 1) = t(j + 1, j) = beta[j];
    }
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(t);
    return std::max(1.0, std::abs(es.eigenvalues()(0)));
}

EigenSolution solve_lobpcg(const HamiltonianOperator& op, const SolverOptions& o) {
    const std::size_t n = op.basis().size();
    const Index nb = o.block_size;
    const Index nev = o.n_eigenpairs;
    auto basis = op.basis_ptr();

    const double sigma =
        o.preconditioner_shift > 0.0 ? o.preconditioner_shift : lanczos_shift_estimate(op);
    const auto kin = op.kinetic();

    BlockOperator hop(op);
    MatrixXcd x(n, nb), hx(n, nb);

    // Start block: warm-start columns, then the constant mode, then random
    // real fields from the seed.
    {
        std::mt19937_64 rng(o.seed);
        Index col = 0;
        for (const FourierField& f : o.initial_guess) {
            if (col >= nb) break;
            const FourierField g = embed_into(f, basis);
            std::copy_n(g.coeffs().data(), n, x.col(col).data());
            ++col;
        }
        if (col < nb) {
            x.col(col).setZero();
            x(static_cast<Index>(n / 2), col) = Complex{1.0, 0.0};
            ++col;
        }
        while (col < nb) {
            const FourierField g = random_real_field(basis, rng);
            std::copy_n(g.coeffs().data(), n, x.col(col).data());
            ++col;
        }
    }
    {
        MatrixXcd dummy = MatrixXcd::Zero(n, nb);
        const Index kept = orthonormalize(x, dummy);
        if (kept < nb) {
            throw ConvergenceError("solver: starting block is rank deficient", {});
        }
    }
    hop.apply_columns(x, hx, 0, nb);

    MatrixXcd p, hp; // previous search directions (empty on first iteration)
    VectorXd lambda(nb);
    std::vector<double> residuals(static_cast<std::size_t>(nev), 0.0);

    for (int iter = 1; iter <= o.max_iterations; ++iter) {
        // Rayleigh-Ritz inside the current block.
        {
            const MatrixXd a = (x.adjoint() * hx).real();
            Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
            const MatrixXd& q = es.eigenvectors();
            lambda = es.eigenvalues();
            x = x * q;
            hx = hx * q;
        }

        MatrixXcd r(n, nb);
        for (Index c = 0; c < nb; ++c) r.col(c) = hx.col(c) - lambda(c) * x.col(c);
        bool done = true;
        for (Index c = 0; c < nev; ++c) {
            residuals[static_cast<std::size_t>(c)] = r.col(c).norm();
            done = done && residuals[static_cast<std::size_t>(c)] <= o.residual_tol;
        }
        if (done) {
            EigenSolution sol;
            sol.iterations = iter;
            for (Index c = 0; c < nev; ++c) {
                FourierField v(basis, true);
                std::copy_n(x.col(c).data(), n, v.coeffs().data());
                sol.eigenvalues.push_back(lambda(c));
                sol.residuals.push_back(residuals[static_cast<std::size_t>(c)]);
                sol.eigenvectors.push_back(std::move(v));
            }
            return sol;
        }
        if (iter == o.max_iterations) break;

        // Preconditioned residuals.
        MatrixXcd w(n, nb);
        for (Index c = 0; c < nb; ++c) {
            const Complex* rc = r.col(c).data();
            Complex* wc = w.col(c).data();
            for (std::size_t i = 0; i < n; ++i) wc[i] = rc[i] / (kin[i] + sigma);
        }

        // Trial subspace [x w p], orthonormalized.
        const Index np = p.cols();
        MatrixXcd s(n, nb + nb + np), hs(n, nb + nb + np);
        s.leftCols(nb) = x;
        hs.leftCols(nb) = hx;
        s.middleCols(nb, nb) = w;
        MatrixXcd hw(n, nb);
        hop.apply_columns(w, hw, 0, nb);
        hs.middleCols(nb, nb) = hw;
        if (np > 0) {
            s.rightCols(np) = p;
            hs.rightCols(np) = hp;
        }
        const Index kept = orthonormalize(s, hs);
        if (kept < nb) {
            throw ConvergenceError("solver: trial subspace collapsed", residuals);
        }

        // Rayleigh-Ritz on the trial subspace.
        const MatrixXd a = (s.adjoint() * hs).real();
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
        const MatrixXd c = es.eigenvectors().leftCols(nb);
        MatrixXcd xn = s * c;
        MatrixXcd hxn = hs * c;

        // New directions: the part of the update orthogonal to the old block.
        const MatrixXd overlap = (x.adjoint() * xn).real();
        p = xn - x * overlap;
        hp = hxn - hx * overlap;
        // Drop negligible direction columns to keep the Gram matrices sane.
        {
            Index keep = 0;
            for (Index cidx = 0; cidx < p.cols(); ++cidx) {
                const double nrm = p.col(cidx).norm();
                if (nrm > 1e-14) {
                    p.col(keep) = p.col(cidx) / nrm;
                    hp.col(keep) = hp.col(cidx) / nrm;
                    ++keep;
                }
            }
            p.conservativeResize(Eigen::NoChange, keep);
            hp.conservativeResize(Eigen::NoChange, keep);
        }

        x = std::move(xn);
        hx = std::move(hxn);
    }

    throw ConvergenceError("solver: no convergence within max_iterations", residuals);
}

} // namespace

EigenSolution solve_lowest(const HamiltonianOperator& op, const SolverOptions& options) {
    const SolverOptions o = resolve(op, options);
    if (op.basis().size() <= o.dense_fallback_threshold) {
        return solve_dense(op, o);
    }
    return solve_lobpcg(op, o);
}

EigenSolution phase_normalize(const EigenSolution& solution, const Vec3& anchor) {
    EigenSolution out = solution;
    const Vec3 pts[1] = {anchor};
    for (FourierField& v : out.eigenvectors) {
        const Complex val = evaluate_at_points(v, pts)[0];
        const double mag = std::abs(val);
        if (mag <= 1e-8) {
            throw AnchorError("phase_normalize: eigenfunction vanishes at the anchor point");
        }
        if (val.real() > 0.0 && std::abs(val.imag()) <= 1e-14 * mag) {
            continue; // already real and positive
        }
        const Complex phase = std::conj(val) / mag;
        for (Complex& c : v.coeffs()) c *= phase;
        v.set_hermitian(true);
    }
    return out;
}

} // namespace cuspwave
