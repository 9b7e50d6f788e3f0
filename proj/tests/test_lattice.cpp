#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "cuspwave/fourier_grid.hpp"
#include "cuspwave/lattice.hpp"
#include "oracles.hpp"

using namespace cuspwave;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("basis cardinality", "[lattice]") {
    const Cell cell(2.0);
    CHECK(build_basis(cell, 1, CutoffShape::Cubic).size() == 27);

    const CutoffBasis sph1 = build_basis(cell, 1, CutoffShape::Spherical);
    CHECK(sph1.size() == 7);
    for (const Index3 k : {Index3{0, 0, 0}, Index3{1, 0, 0}, Index3{0, -1, 0}, Index3{0, 0, 1}}) {
        CHECK(sph1.contains(k));
    }
    CHECK_FALSE(sph1.contains(Index3{1, 1, 0}));

    // brute-force enumeration of |k|^2 <= 4 over the candidate cube
    std::size_t expected = 0;
    for (int a = -2; a <= 2; ++a)
        for (int b = -2; b <= 2; ++b)
            for (int c = -2; c <= 2; ++c)
                if (a * a + b * b + c * c <= 4) ++expected;
    CHECK(expected == 33);
    CHECK(build_basis(cell, 2, CutoffShape::Spherical).size() == expected);

    CHECK_THROWS_AS(build_basis(cell, 0, CutoffShape::Cubic), DomainError);
}

TEST_CASE("basis ordering, negation closure, nesting", "[lattice]") {
    const Cell cell(3.0);
    for (const CutoffShape shape : {CutoffShape::Spherical, CutoffShape::Cubic}) {
        const CutoffBasis basis = build_basis(cell, 3, shape);
        const auto idx = basis.indices();
        for (std::size_t i = 1; i < idx.size(); ++i) {
            CHECK(idx[i - 1] < idx[i]); // strict lexicographic order
        }
        for (std::size_t i = 0; i < idx.size(); ++i) {
            const Index3 neg{-idx[i][0], -idx[i][1], -idx[i][2]};
            CHECK(basis.position_of(neg) == basis.negation_of(i));
        }
        CHECK(basis.contains({0, 0, 0}));
        CHECK(basis.size() % 2 == 1);

        const CutoffBasis bigger = build_basis(cell, 4, shape);
        for (const Index3& k : idx) CHECK(bigger.contains(k));
    }
}

TEST_CASE("fft grid sizing", "[lattice]") {
    const Cell cell(2.0);
    CHECK(smooth235_at_least(41) == 45);
    CHECK(smooth235_at_least(101) == 108);
    CHECK(fft_grid_size(build_basis(cell, 1, CutoffShape::Cubic)) == Index3{5, 5, 5});
    CHECK(fft_grid_size(build_basis(cell, 10, CutoffShape::Cubic)) == Index3{45, 45, 45});
    CHECK(fft_grid_size(build_basis(cell, 25, CutoffShape::Spherical)) == Index3{108, 108, 108});
}

TEST_CASE("point evaluation", "[lattice]") {
    const Cell cell(2.0 * M_PI);
    auto basis = std::make_shared<const CutoffBasis>(cell, 2, CutoffShape::Spherical);
    const double sq = std::sqrt(cell.volume());

    SECTION("constant field") {
        FourierField u(basis);
        u[basis->position_of({0, 0, 0})] = sq * 3.5;
        const Vec3 pts[2] = {{0.1, -0.7, 2.0}, {5.0, 5.0, 5.0}};
        for (const Complex v : evaluate_at_points(u, pts)) {
            CHECK_THAT(v.real(), WithinAbs(3.5, 1e-12));
            CHECK_THAT(v.imag(), WithinAbs(0.0, 1e-12));
        }
    }

    SECTION("cos(x1)") {
        FourierField u(basis);
        u[basis->position_of({1, 0, 0})] = sq / 2.0;
        u[basis->position_of({-1, 0, 0})] = sq / 2.0;
        const Vec3 pts[2] = {{0.0, 0.0, 0.0}, {M_PI / 2.0, 0.0, 0.0}};
        const auto vals = evaluate_at_points(u, pts);
        CHECK_THAT(vals[0].real(), WithinAbs(1.0, 1e-12));
        CHECK_THAT(vals[1].real(), WithinAbs(0.0, 1e-12));
    }

    SECTION("matches direct summation on random fields") {
        std::mt19937_64 rng(77);
        auto big = std::make_shared<const CutoffBasis>(Cell(1.7), 6, CutoffShape::Cubic);
        const FourierField u = random_real_field(big, rng);
        std::uniform_real_distribution<double> coord(-4.0, 4.0);
        std::vector<Vec3> pts;
        for (int i = 0; i < 10; ++i) pts.push_back({coord(rng), coord(rng), coord(rng)});
        const auto fast = evaluate_at_points(u, pts);
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const Complex exact = testing::direct_evaluate(u, big->cell().reduce(pts[i]));
            CHECK_THAT(std::abs(fast[i] - exact), WithinAbs(0.0, 1e-12 * u.norm()));
            CHECK_THAT(std::abs(fast[i].imag()), WithinAbs(0.0, 1e-12 * u.norm()));
        }
    }
}

TEST_CASE("parseval on the padded grid", "[lattice]") {
    std::mt19937_64 rng(13);
    auto basis = std::make_shared<const CutoffBasis>(Cell(2.0), 5, CutoffShape::Spherical);
    const FourierField u = random_real_field(basis, rng);
    const Index3 grid = fft_grid_size(*basis);

    double coeff_norm2 = 0.0;
    for (const Complex& c : u.coeffs()) coeff_norm2 += std::norm(c);

    const auto samples = synthesize_on_grid(u, grid);
    CHECK_THAT(grid_norm_squared(std::span<const Complex>(samples), basis->cell()),
               WithinRel(coeff_norm2, 1e-12));

    const auto real_samples = synthesize_real_on_grid(u, grid);
    CHECK_THAT(grid_norm_squared(std::span<const double>(real_samples), basis->cell()),
               WithinRel(coeff_norm2, 1e-12));

    // the two synthesis routes agree
    for (std::size_t j = 0; j < samples.size(); j += 97) {
        CHECK_THAT(samples[j].real(), WithinAbs(real_samples[j], 1e-11));
        CHECK_THAT(samples[j].imag(), WithinAbs(0.0, 1e-11));
    }
}

TEST_CASE("hermitian fields and embedding", "[lattice]") {
    std::mt19937_64 rng(5);
    auto basis = std::make_shared<const CutoffBasis>(Cell(2.0), 3, CutoffShape::Cubic);
    FourierField u = random_real_field(basis, rng);
    CHECK(u.hermitian());
    CHECK_THAT(hermitian_asymmetry(u), WithinAbs(0.0, 1e-15));

    u[basis->position_of({1, 2, 0})] += Complex{0.5, 0.25};
    CHECK(hermitian_asymmetry(u) > 0.1);

    auto target = std::make_shared<const CutoffBasis>(Cell(2.0), 5, CutoffShape::Cubic);
    const FourierField big = embed_into(u, target);
    CHECK(big.size() == target->size());
    for (std::size_t i = 0; i < basis->size(); ++i) {
        CHECK(big[target->position_of(basis->index(i))] == u[i]);
    }
    CHECK_THAT(big.norm(), WithinRel(u.norm(), 1e-15));

    auto smaller = std::make_shared<const CutoffBasis>(Cell(2.0), 2, CutoffShape::Cubic);
    CHECK_THROWS_AS(embed_into(u, smaller), DimensionError);
    auto other_cell = std::make_shared<const CutoffBasis>(Cell(3.0), 5, CutoffShape::Cubic);
    CHECK_THROWS_AS(embed_into(u, other_cell), DimensionError);
}

TEST_CASE("cell reduction", "[lattice]") {
    const Cell cell(2.0);
    const Vec3 r = cell.reduce({1.0, -1.0, 7.3});
    CHECK_THAT(r[0], WithinAbs(-1.0, 1e-15)); // +L/2 folds to -L/2
    CHECK_THAT(r[1], WithinAbs(-1.0, 1e-15));
    CHECK_THAT(r[2], WithinAbs(-0.7, 1e-12));
    CHECK_THROWS_AS(Cell(0.0), DomainError);
    CHECK_THROWS_AS(Cell(-1.0), DomainError);
}
