#include <doctest.h>

#include <random>

#include "atm/errors.hpp"
#include "atm/sweeps.hpp"
#include "support/dense_oracle.hpp"
#include "support/random_fields.hpp"

using namespace atm;

namespace {

double rel(const GridFunction& a, const GridFunction& b) { return atm::testing::relative_difference(a, b); }

GridFunction residual(const GridFunction& lhs, const GridFunction& b) { return lhs - b; }

}  // namespace

TEST_CASE("c = 0 is the identity") {
    const Grid g = Grid::unit_square(6);
    const Coefficient k = atm::testing::rough_coefficient(g, 1);
    std::mt19937_64 rng(10);
    const GridFunction b = atm::testing::random_function(g, rng);
    CHECK(solve_upper(k, 0.0, b) == b);
    CHECK(solve_lower(k, 0.0, b) == b);
    CHECK(solve_factorized(k, 0.0, b) == b);
}

TEST_CASE("single interior node") {
    const Grid g = Grid::unit_square(2);
    const Coefficient k = Coefficient::constant(g, 1.0);
    const GridFunction b(g, {1.0});
    CHECK(solve_upper(k, 1.0, b)[0] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(solve_lower(k, 1.0, b)[0] == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
    CHECK(solve_lower(k, 0.5, b)[0] == doctest::Approx(1.0 / 5.0).epsilon(1e-15));
}

TEST_CASE("triangular residuals") {
    const Grid g(1.0, 2.0, 12, 9);
    const Coefficient k = atm::testing::rough_coefficient(g, 2);
    std::mt19937_64 rng(11);
    for (double c : {0.01, 1.0, 100.0}) {
        const GridFunction b = atm::testing::random_function(g, rng);
        const GridFunction xu = solve_upper(k, c, b);
        GridFunction lu = xu;
        lu.axpy(c, apply_A1(k, xu));
        CHECK(norm(residual(lu, b)) <= 1e-12 * norm(b));

        const GridFunction xl = solve_lower(k, c, b);
        GridFunction ll = xl;
        ll.axpy(c, apply_A2(k, xl));
        CHECK(norm(residual(ll, b)) <= 1e-12 * norm(b));
    }
}

TEST_CASE("lower sweep is the transposed upper solve") {
    const Grid g = Grid::unit_square(4);
    const auto field = atm::testing::rough_field(4);
    const Coefficient k(g, field, 1.0, 2.0);
    const atm::testing::DenseOracle o(g, field);
    std::mt19937_64 rng(12);
    const GridFunction b = atm::testing::random_function(g, rng);
    const double c = 0.3;
    const Eigen::MatrixXd upper = o.I + c * o.A1;
    const Eigen::VectorXd want = upper.transpose().partialPivLu().solve(o.vec(b));
    CHECK(atm::testing::relative_error(o.vec(solve_lower(k, c, b)), want) <= 1e-14);
    const Eigen::VectorXd want_u = upper.partialPivLu().solve(o.vec(b));
    CHECK(atm::testing::relative_error(o.vec(solve_upper(k, c, b)), want_u) <= 1e-14);
}

TEST_CASE("factorized solve") {
    const Grid g = Grid::unit_square(16);
    const Coefficient k = atm::testing::rough_coefficient(g, 3);
    const double tau0 = 2.0 / estimate_norm_A(k);
    std::mt19937_64 rng(13);
    const double c = 1.0 * 10.0 * tau0;

    const GridFunction b = atm::testing::random_function(g, rng);
    const GridFunction x = solve_factorized(k, c, b);
    CHECK(norm(apply_B(k, 1.0, c, x) - b) <= 1e-11 * norm(b));

    const GridFunction y = atm::testing::random_function(g, rng);
    CHECK(rel(solve_factorized(k, c, apply_B(k, 1.0, c, y)), y) <= 1e-11);

    SweepWorkspace ws(g);
    CHECK(solve_factorized(k, c, b, SweepOrder::lexicographic, ws) == x);
    SweepWorkspace wrong(Grid::unit_square(8));
    CHECK_THROWS_AS(solve_factorized(k, c, b, SweepOrder::lexicographic, wrong), IncompatibleGrids);
}

TEST_CASE("wavefront order is bit-identical") {
    std::mt19937_64 rng(14);
    for (auto [c1, c2] : {std::pair{2, 2}, {3, 7}, {9, 4}, {17, 17}, {33, 20}}) {
        const Grid g(1.0, 1.0, c1, c2);
        const Coefficient k = atm::testing::rough_coefficient(g, c1 * 100 + c2);
        const GridFunction b = atm::testing::random_function(g, rng);
        for (double c : {0.0, 1e-3, 1.0, 1e3}) {
            CHECK(solve_upper(k, c, b, SweepOrder::wavefront) == solve_upper(k, c, b, SweepOrder::lexicographic));
            CHECK(solve_lower(k, c, b, SweepOrder::wavefront) == solve_lower(k, c, b, SweepOrder::lexicographic));
            CHECK(solve_factorized(k, c, b, SweepOrder::wavefront) ==
                  solve_factorized(k, c, b, SweepOrder::lexicographic));
        }
    }
}

TEST_CASE("sweep errors") {
    const Grid g = Grid::unit_square(4);
    const Coefficient k = Coefficient::constant(g, 1.0);
    const GridFunction b(g);
    CHECK_THROWS_AS(solve_upper(k, -1.0, b), std::domain_error);
    CHECK_THROWS_AS(solve_lower(k, -1e-9, b), std::domain_error);
    CHECK_THROWS_AS(solve_factorized(k, -1.0, b), std::domain_error);
    CHECK_THROWS_AS(solve_upper(k, 1.0, GridFunction(Grid::unit_square(5))), IncompatibleGrids);
}
