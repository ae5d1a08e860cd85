#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <random>

#include "atm/errors.hpp"
#include "atm/operators.hpp"
#include "support/dense_oracle.hpp"
#include "support/random_fields.hpp"

using namespace atm;
using atm::testing::DenseOracle;
using std::numbers::pi;

namespace {

GridFunction product_sine(const Grid& g, int m1 = 1, int m2 = 1) {
    return sample(g, [&](double x1, double x2, double) {
        return std::sin(m1 * pi * x1 / g.l1()) * std::sin(m2 * pi * x2 / g.l2());
    });
}

double rel(const GridFunction& a, const GridFunction& b) { return atm::testing::relative_difference(a, b); }

}  // namespace

TEST_CASE("coefficient sampling") {
    const Grid g(1.0, 2.0, 4, 5);
    const Coefficient k(g, [](double x1, double x2) { return 1.0 + x1 + 0.1 * x2; }, 1.0, 2.5);
    CHECK_FALSE(k.is_constant());
    CHECK(k.face1(0, 1) == doctest::Approx(1.0 + 0.125 + 0.04));
    CHECK(k.face1(3, 4) == doctest::Approx(1.0 + 0.875 + 0.16));
    CHECK(k.face2(1, 0) == doctest::Approx(1.0 + 0.25 + 0.02));
    CHECK(k.face2(3, 4) == doctest::Approx(1.0 + 0.75 + 0.18));
    // Weight of node (1,1) toward its west neighbor is k(h1/2, x2)/h1^2.
    CHECK(k.west()[g.index(1, 1)] == doctest::Approx(k.face1(0, 1) * 16.0));
    CHECK(k.north()[g.index(2, 3)] == doctest::Approx(k.face2(2, 3) / (0.4 * 0.4)));

    CHECK(Coefficient::constant(g, 3.0).is_constant());
    CHECK_THROWS_AS(Coefficient(g, [](double, double) { return 1.0; }, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Coefficient(g, [](double, double) { return 1.0; }, 2.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(Coefficient(g, [](double x1, double) { return 1.0 + x1; }, 1.0, 1.5), std::invalid_argument);
    CHECK_THROWS_AS(Coefficient::constant(g, -1.0), std::invalid_argument);
}

TEST_CASE("one interior node") {
    const Grid g = Grid::unit_square(2);
    const Coefficient k = Coefficient::constant(g, 1.0);
    const GridFunction y(g, {1.0});
    CHECK(apply_D1(k, y)[0] == 8.0);
    CHECK(apply_D2(k, y)[0] == 8.0);
    CHECK(apply_A(k, y)[0] == 16.0);
    CHECK(apply_A1(k, y)[0] == 8.0);
    CHECK(apply_A2(k, y)[0] == 8.0);
}

TEST_CASE("zero input gives zero output") {
    const Grid g(1.0, 1.0, 5, 7);
    const Coefficient k = atm::testing::rough_coefficient(g, 1);
    const GridFunction zero(g);
    CHECK(apply_D1(k, zero) == zero);
    CHECK(apply_D2(k, zero) == zero);
    CHECK(apply_A(k, zero) == zero);
    CHECK(apply_A1(k, zero) == zero);
    CHECK(apply_A2(k, zero) == zero);
}

TEST_CASE("constant-coefficient eigenfunctions") {
    const Grid g(1.0, 1.0, 16, 16);
    const Coefficient k = Coefficient::constant(g, 1.0);
    const GridFunction e = product_sine(g);
    const double l1 = 4.0 / (g.h1() * g.h1()) * std::pow(std::sin(pi * g.h1() / 2.0), 2);
    const double l2 = 4.0 / (g.h2() * g.h2()) * std::pow(std::sin(pi * g.h2() / 2.0), 2);
    CHECK(rel(apply_D1(k, e), l1 * e) <= 1e-13);
    CHECK(rel(apply_D2(k, e), l2 * e) <= 1e-13);
    CHECK(rel(apply_A(k, e), (l1 + l2) * e) <= 1e-13);
    CHECK(mode_eigenvalue(g, 1, 1) == doctest::Approx(l1 + l2).epsilon(1e-14));
}

TEST_CASE("D2 ignores h1") {
    std::vector<double> values(15);
    std::iota(values.begin(), values.end(), 1.0);
    const Grid a(1.0, 1.0, 4, 6);
    const Grid b(3.0, 1.0, 4, 6);
    const GridFunction ya(a, values), yb(b, values);
    const auto da = apply_D2(Coefficient::constant(a, 1.0), ya);
    const auto db = apply_D2(Coefficient::constant(b, 1.0), yb);
    CHECK(std::equal(da.values().begin(), da.values().end(), db.values().begin()));
}

TEST_CASE("splitting identities on random data") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Grid g(1.0 + trial * 0.1, 1.0, 5 + trial % 7, 4 + trial % 5);
        const Coefficient k = atm::testing::rough_coefficient(g, 50 + trial);
        const GridFunction y = atm::testing::random_function(g, rng);
        const GridFunction w = atm::testing::random_function(g, rng);
        CHECK(rel(apply_D1(k, y) + apply_D2(k, y), apply_A(k, y)) <= 1e-15);
        CHECK(rel(apply_A1(k, y) + apply_A2(k, y), apply_A(k, y)) <= 1e-14);
        const double lhs = inner_product(apply_A1(k, y), w);
        const double rhs = inner_product(y, apply_A2(k, w));
        CHECK(std::abs(lhs - rhs) <= 1e-13 * (std::abs(lhs) + norm(apply_A1(k, y)) * norm(w)));
        const double ay_w = inner_product(apply_A(k, y), w);
        const double y_aw = inner_product(y, apply_A(k, w));
        CHECK(std::abs(ay_w - y_aw) <= 1e-13 * norm(apply_A(k, y)) * norm(w));
        CHECK(rel(apply_A1A2(k, y), apply_A1(k, apply_A2(k, y))) == 0.0);
    }
}

TEST_CASE("operators against dense matrices") {
    std::mt19937_64 rng(8);
    for (int cells : {2, 3, 4, 6}) {
        const Grid g = Grid::unit_square(cells);
        const auto field = atm::testing::rough_field(cells);
        const Coefficient k(g, field, 1.0, 2.0);
        const DenseOracle o(g, field);
        const GridFunction y = atm::testing::random_function(g, rng);
        const auto v = o.vec(y);
        CHECK(atm::testing::relative_error(o.vec(apply_D1(k, y)), o.D1 * v) <= 1e-14);
        CHECK(atm::testing::relative_error(o.vec(apply_D2(k, y)), o.D2 * v) <= 1e-14);
        CHECK(atm::testing::relative_error(o.vec(apply_A1(k, y)), o.A1 * v) <= 1e-14);
        CHECK(atm::testing::relative_error(o.vec(apply_A2(k, y)), o.A2 * v) <= 1e-14);
        // Adjointness on a uniform grid is plain transposition.
        CHECK((o.A1.transpose() - o.A2).norm() <= 1e-13 * o.A.norm());
    }
}

TEST_CASE("factorized operators") {
    const Grid g = Grid::unit_square(9);
    const Coefficient k = atm::testing::rough_coefficient(g, 3);
    std::mt19937_64 rng(9);
    const GridFunction y = atm::testing::random_function(g, rng);

    SUBCASE("sigma = 0 is the identity") {
        CHECK(apply_B(k, 0.0, 1.0, y) == y);
        CHECK(apply_G_hyperbolic(k, 0.0, 1.0, y) == y);
        CHECK(apply_C(k, 0.0, 1.0, y) == y);
    }
    SUBCASE("expansions") {
        for (double tau : {1e-4, 1e-2, 1.0}) {
            for (double sigma : {0.5, 1.0}) {
                GridFunction b = y;
                b.axpy(sigma * tau, apply_A(k, y));
                b.axpy(sigma * sigma * tau * tau, apply_A1A2(k, y));
                CHECK(rel(apply_B(k, sigma, tau, y), b) <= 1e-13);

                const double t2 = tau * tau;
                CHECK(apply_G_hyperbolic(k, sigma, tau, y) == apply_B(k, sigma, t2, y));
                GridFunction gy = y;
                gy.axpy(sigma * t2, apply_A(k, y));
                gy.axpy(sigma * sigma * t2 * t2, apply_A1A2(k, y));
                CHECK(rel(apply_G_hyperbolic(k, sigma, tau, y), gy) <= 1e-13);

                GridFunction r = y;
                r.axpy((sigma - 0.25) * t2, apply_A(k, y));
                r.axpy(sigma * sigma * t2 * t2, apply_A1A2(k, y));
                CHECK(rel(apply_R_hyperbolic(k, sigma, tau, y), r) <= 1e-12);

                GridFunction m = 0.5 * tau * y;
                m.axpy(0.25 * t2 * (2.0 * sigma - 1.0), apply_A(k, y));
                m.axpy(sigma * sigma * t2 * tau, apply_A1A2(k, y));
                CHECK(rel(apply_R_mlatm(k, sigma, tau, y), m) <= 1e-13);
            }
        }
    }
    SUBCASE("B dominates E + sigma tau A") {
        for (int trial = 0; trial < 20; ++trial) {
            const GridFunction z = atm::testing::random_function(g, rng);
            const double tau = 0.1 * (trial + 1);
            const double lhs = inner_product(apply_B(k, 1.0, tau, z), z);
            const double rhs = inner_product(z, z) + tau * inner_product(apply_A(k, z), z);
            CHECK(lhs >= rhs * (1.0 - 1e-14));
        }
    }
    SUBCASE("hyperbolic energy weight is positive for sigma >= 1/4") {
        for (int trial = 0; trial < 100; ++trial) {
            const GridFunction z = atm::testing::random_function(g, rng);
            CHECK(inner_product(apply_R_hyperbolic(k, 0.3, 1.0, z), z) >= inner_product(z, z));
        }
        // At sigma = 1/4 the A term drops out on a single node.
        const Grid one = Grid::unit_square(2);
        const Coefficient k1 = Coefficient::constant(one, 1.0);
        const GridFunction u(one, {1.0});
        CHECK(apply_R_hyperbolic(k1, 0.25, 0.5, u)[0] == doctest::Approx(1.0 + 0.0625 * 0.0625 * 64.0));
    }
    SUBCASE("sigma = 0 hyperbolic weight is indefinite for large tau") {
        const Coefficient k1 = Coefficient::constant(g, 1.0);
        const GridFunction top = product_sine(g, 8, 8);
        CHECK(inner_product(apply_R_hyperbolic(k1, 0.0, 1.0, top), top) < 0.0);
        CHECK(inner_product(apply_R_hyperbolic(k1, 0.0, 1e-3, top), top) > 0.0);
    }
    SUBCASE("grid mismatch") {
        const GridFunction other(Grid::unit_square(4));
        CHECK_THROWS_AS(apply_A(k, other), IncompatibleGrids);
        CHECK_THROWS_AS(apply_A1(k, other), IncompatibleGrids);
        CHECK_THROWS_AS(apply_B(k, 1.0, 1.0, other), IncompatibleGrids);
    }
}

TEST_CASE("spectral bounds") {
    SUBCASE("h = 1/4") {
        const auto b = spectral_bounds(Coefficient::constant(Grid::unit_square(4), 1.0));
        CHECK(b.delta1 == doctest::Approx(64.0 * std::pow(std::sin(pi / 8.0), 2)).epsilon(1e-14));
        CHECK(b.delta1 == doctest::Approx(9.3726).epsilon(1e-4));
        CHECK(b.Delta1 == doctest::Approx(54.627).epsilon(1e-4));
        CHECK(b.delta == doctest::Approx(18.745).epsilon(1e-4));
        CHECK(b.Delta == doctest::Approx(109.25).epsilon(1e-4));
        CHECK(b.lower == b.delta);
        CHECK(b.upper == b.Delta);
    }
    SUBCASE("coarsest grid") {
        const auto b = spectral_bounds(Coefficient::constant(Grid::unit_square(2), 1.0));
        CHECK(b.delta1 == doctest::Approx(8.0).epsilon(1e-14));
        CHECK(b.Delta1 == doctest::Approx(8.0).epsilon(1e-14));
    }
    SUBCASE("strict ordering from three cells") {
        for (int n = 3; n < 20; ++n) {
            const auto b = spectral_bounds(Coefficient::constant(Grid(1.0, 2.0, n, n + 1), 1.0));
            CHECK(b.delta1 < b.Delta1);
            CHECK(b.delta2 < b.Delta2);
        }
    }
    SUBCASE("dense eigenvalues") {
        const Grid g(1.0, 1.5, 6, 5);
        const auto field = atm::testing::rough_field(5, 1.0, 3.0);
        const Coefficient k(g, field, 1.0, 3.0);
        const DenseOracle o(g, field);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(o.A);
        const auto b = spectral_bounds(k);
        CHECK(es.eigenvalues().minCoeff() >= b.lower * (1.0 - 1e-12));
        CHECK(es.eigenvalues().maxCoeff() <= b.upper * (1.0 + 1e-12));

        const DenseOracle c(g, [](double, double) { return 1.0; });
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ec(c.A);
        const auto bc = spectral_bounds(Coefficient::constant(g, 1.0));
        CHECK(ec.eigenvalues().minCoeff() == doctest::Approx(bc.delta).epsilon(1e-12));
        CHECK(ec.eigenvalues().maxCoeff() == doctest::Approx(bc.Delta).epsilon(1e-12));
    }
}

TEST_CASE("power iteration for ||A||") {
    const Grid g = Grid::unit_square(4);
    const double one = estimate_norm_A(Coefficient::constant(g, 1.0));
    CHECK(one == doctest::Approx(109.25).epsilon(1e-4));
    CHECK(std::abs(one - spectral_bounds(Coefficient::constant(g, 1.0)).Delta) <= 1e-8 * one);
    CHECK(estimate_norm_A(Coefficient::constant(g, 3.0)) == doctest::Approx(3.0 * one).epsilon(1e-8));

    const Grid f = Grid::unit_square(16);
    const Coefficient k = atm::testing::rough_coefficient(f, 77);
    const auto b = spectral_bounds(k);
    const double est = estimate_norm_A(k);
    CHECK(est >= b.delta);
    CHECK(est <= 2.0 * b.Delta);

    NormEstimateOptions capped;
    capped.max_iterations = 2;
    capped.tol = 1e-15;
    try {
        estimate_norm_A(Coefficient::constant(f, 1.0), capped);
        FAIL("expected ConvergenceFailure");
    } catch (const ConvergenceFailure& e) {
        CHECK(e.last_estimate() > 0.0);
        CHECK(e.iterations() == 2);
    }
    CHECK(estimate_norm_A(k) == estimate_norm_A(k));
}
