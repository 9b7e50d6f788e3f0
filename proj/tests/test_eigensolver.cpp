#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "cuspwave/eigensolver.hpp"
#include "cuspwave/fourier_grid.hpp"

using namespace cuspwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

ChargeConfig pair_config(const Cell& cell, double z = 2.0, double r = 0.7) {
    return ChargeConfig(cell, {{z, {r / 2.0, 0.0, 0.0}}, {z, {-r / 2.0, 0.0, 0.0}}});
}

SolverOptions iterative_options() {
    SolverOptions o;
    o.dense_fallback_threshold = 0; // force the block iteration
    o.residual_tol = 1e-10;
    o.max_iterations = 600;
    return o;
}

} // namespace

TEST_CASE("free particle spectrum", "[eigensolver]") {
    const Cell cell(2.0);
    const ChargeConfig vacuum(cell, {});
    for (const bool force_iterative : {false, true}) {
        auto basis = std::make_shared<const CutoffBasis>(cell, 2, CutoffShape::Cubic);
        const HamiltonianOperator op(basis, vacuum);
        SolverOptions o = force_iterative ? iterative_options() : SolverOptions{};
        o.n_eigenpairs = 2;
        o.block_size = 6;
        const EigenSolution sol = solve_lowest(op, o);
        CHECK_THAT(sol.eigenvalues[0], WithinAbs(0.0, 1e-10));
        const double g = cell.reciprocal_step();
        CHECK_THAT(sol.eigenvalues[1], WithinAbs(0.5 * g * g, 1e-9));
        CHECK(sol.dense_path == !force_iterative);
        // ground state is the constant mode
        const Vec3 origin{0.0, 0.0, 0.0};
        const Complex at0 = evaluate_at_points(sol.eigenvectors[0], std::span(&origin, 1))[0];
        CHECK_THAT(std::abs(at0), WithinRel(1.0 / std::sqrt(cell.volume()), 1e-8));
    }
}

TEST_CASE("iterative and dense paths agree", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 3, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));

    SolverOptions dense;
    dense.n_eigenpairs = 3;
    const EigenSolution ds = solve_lowest(op, dense);
    REQUIRE(ds.dense_path);

    SolverOptions iter = iterative_options();
    iter.n_eigenpairs = 3;
    iter.block_size = 5;
    const EigenSolution is = solve_lowest(op, iter);
    REQUIRE_FALSE(is.dense_path);

    for (int i = 0; i < 3; ++i) {
        CHECK_THAT(is.eigenvalues[i], WithinAbs(ds.eigenvalues[i], 1e-9));
        CHECK(is.residuals[i] <= iter.residual_tol);
    }
}

TEST_CASE("separable cosine potential", "[eigensolver]") {
    const Cell cell(2.0);
    const ChargeConfig vacuum(cell, {});
    SmoothPotential w;
    w.add_cosine({1, 0, 0}, 2.0, cell); // 2 cos(2 pi x1 / L)
    auto basis = std::make_shared<const CutoffBasis>(cell, 3, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, vacuum, w);

    SolverOptions dense;
    const double e_dense = solve_lowest(op, dense).eigenvalues[0];
    SolverOptions iter = iterative_options();
    const double e_iter = solve_lowest(op, iter).eigenvalues[0];
    CHECK_THAT(e_iter, WithinAbs(e_dense, 1e-10));
}

TEST_CASE("solution invariants", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 3, CutoffShape::Spherical);
    const HamiltonianOperator op(basis, pair_config(cell));
    SolverOptions o = iterative_options();
    o.n_eigenpairs = 3;
    const EigenSolution sol = solve_lowest(op, o);

    SECTION("orthonormality") {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j <= i; ++j) {
                const Complex dot = inner_product(sol.eigenvectors[i], sol.eigenvectors[j]);
                CHECK_THAT(std::abs(dot - (i == j ? 1.0 : 0.0)), WithinAbs(0.0, 1e-10));
            }
        }
    }

    SECTION("rayleigh quotient consistency") {
        for (int i = 0; i < 3; ++i) {
            const Complex q = inner_product(sol.eigenvectors[i], op.apply(sol.eigenvectors[i]));
            CHECK_THAT(q.real(), WithinAbs(sol.eigenvalues[i],
                                           o.residual_tol * std::abs(sol.eigenvalues[i]) + 1e-12));
        }
    }

    SECTION("eigenvectors are real functions") {
        for (const FourierField& v : sol.eigenvectors) {
            CHECK(v.hermitian());
            CHECK_THAT(hermitian_asymmetry(v), WithinAbs(0.0, 1e-12));
        }
    }
}

TEST_CASE("variational monotonicity in the cutoff", "[eigensolver]") {
    const Cell cell(2.0);
    double prev = 1e30;
    for (int m = 2; m <= 5; ++m) {
        auto basis = std::make_shared<const CutoffBasis>(cell, m, CutoffShape::Cubic);
        const HamiltonianOperator op(basis, pair_config(cell));
        const double e = solve_lowest(op, {}).eigenvalues[0];
        CHECK(e <= prev + 1e-10);
        prev = e;
    }
}

TEST_CASE("seed invariance of converged eigenvalues", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 3, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));
    SolverOptions a = iterative_options();
    a.seed = 1;
    SolverOptions b = iterative_options();
    b.seed = 987654321;
    const double ea = solve_lowest(op, a).eigenvalues[0];
    const double eb = solve_lowest(op, b).eigenvalues[0];
    CHECK_THAT(ea, WithinAbs(eb, a.residual_tol));
}

TEST_CASE("determinism for a fixed seed", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 3, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));
    const SolverOptions o = iterative_options();
    const EigenSolution s1 = solve_lowest(op, o);
    const EigenSolution s2 = solve_lowest(op, o);
    CHECK(s1.eigenvalues[0] == s2.eigenvalues[0]);
    CHECK(s1.iterations == s2.iterations);
    for (std::size_t i = 0; i < s1.eigenvectors[0].size(); ++i) {
        CHECK(s1.eigenvectors[0][i] == s2.eigenvectors[0][i]);
    }
}

TEST_CASE("warm start accepts smaller-basis guesses", "[eigensolver]") {
    const Cell cell(2.0);
    auto small = std::make_shared<const CutoffBasis>(cell, 2, CutoffShape::Cubic);
    auto big = std::make_shared<const CutoffBasis>(cell, 4, CutoffShape::Cubic);
    const HamiltonianOperator op_small(small, pair_config(cell));
    const HamiltonianOperator op_big(big, pair_config(cell));

    const EigenSolution coarse = solve_lowest(op_small, {});
    SolverOptions warm = iterative_options();
    warm.initial_guess = coarse.eigenvectors;
    const EigenSolution fine = solve_lowest(op_big, warm);

    SolverOptions cold = iterative_options();
    const EigenSolution ref = solve_lowest(op_big, cold);
    CHECK_THAT(fine.eigenvalues[0], WithinAbs(ref.eigenvalues[0], 1e-9));
    CHECK(fine.iterations <= ref.iterations);
}

TEST_CASE("parity symmetry of the symmetric-pair ground state", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 5, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));
    const EigenSolution sol =
        phase_normalize(solve_lowest(op, {}), Vec3{0.35, 0.0, 0.0});
    const Index3 grid = fft_grid_size(*basis);
    const auto samples = synthesize_real_on_grid(sol.eigenvectors[0], grid);
    const auto at = [&](int a, int b, int c) {
        return samples[(static_cast<std::size_t>(a) * grid[1] + b) * grid[2] + c];
    };
    for (int a = 0; a < grid[0]; a += 3) {
        for (int b = 0; b < grid[1]; b += 5) {
            for (int c = 0; c < grid[2]; c += 7) {
                const int na = (grid[0] - a) % grid[0];
                const int nb = (grid[1] - b) % grid[1];
                const int nc = (grid[2] - c) % grid[2];
                CHECK_THAT(at(a, b, c), WithinAbs(at(na, nb, nc), 1e-8));
            }
        }
    }
}

TEST_CASE("phase normalization", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 2, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));
    const Vec3 anchor{0.35, 0.0, 0.0};
    const EigenSolution sol = phase_normalize(solve_lowest(op, {}), anchor);

    SECTION("idempotent and positive at the anchor") {
        const Complex v = evaluate_at_points(sol.eigenvectors[0], std::span(&anchor, 1))[0];
        CHECK(v.real() > 0.0);
        CHECK_THAT(std::abs(v.imag()), WithinAbs(0.0, 1e-12));
        const EigenSolution again = phase_normalize(sol, anchor);
        for (std::size_t i = 0; i < sol.eigenvectors[0].size(); ++i) {
            CHECK(again.eigenvectors[0][i] == sol.eigenvectors[0][i]);
        }
    }

    SECTION("phase rotation is undone") {
        EigenSolution rotated = sol;
        const Complex phase = std::polar(1.0, 0.8123);
        for (Complex& c : rotated.eigenvectors[0].coeffs()) c *= phase;
        rotated.eigenvectors[0].set_hermitian(false);
        const EigenSolution fixed = phase_normalize(rotated, anchor);
        double diff = 0.0;
        for (std::size_t i = 0; i < sol.eigenvectors[0].size(); ++i) {
            diff = std::max(diff, std::abs(fixed.eigenvectors[0][i] - sol.eigenvectors[0][i]));
        }
        CHECK_THAT(diff, WithinAbs(0.0, 1e-12));
        CHECK_THAT(hermitian_asymmetry(fixed.eigenvectors[0]), WithinAbs(0.0, 1e-12));
    }

    SECTION("vanishing anchor value") {
        EigenSolution sine = sol;
        FourierField& v = sine.eigenvectors[0];
        for (Complex& c : v.coeffs()) c = 0.0;
        v[v.basis().position_of({1, 0, 0})] = Complex{0.0, -M_SQRT1_2};
        v[v.basis().position_of({-1, 0, 0})] = Complex{0.0, M_SQRT1_2}; // sin(2 pi x1 / L)
        CHECK_THROWS_AS(phase_normalize(sine, Vec3{0.0, 0.0, 0.0}), AnchorError);
    }
}

TEST_CASE("solver error paths", "[eigensolver]") {
    const Cell cell(2.0);
    auto basis = std::make_shared<const CutoffBasis>(cell, 2, CutoffShape::Cubic);
    const HamiltonianOperator op(basis, pair_config(cell));

    SolverOptions strict = iterative_options();
    strict.residual_tol = 1e-15;
    strict.max_iterations = 2;
    try {
        solve_lowest(op, strict);
        FAIL("expected ConvergenceError");
    } catch (const ConvergenceError& e) {
        REQUIRE_FALSE(e.residuals().empty());
        CHECK(e.residuals()[0] > strict.residual_tol);
    }

    SolverOptions bad;
    bad.n_eigenpairs = static_cast<int>(basis->size()) + 1;
    CHECK_THROWS_AS(solve_lowest(op, bad), DomainError);

    SolverOptions badblock;
    badblock.n_eigenpairs = 3;
    badblock.block_size = 2;
    CHECK_THROWS_AS(solve_lowest(op, badblock), DomainError);
}
