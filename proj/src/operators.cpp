#include "atm/operators.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "atm/errors.hpp"

namespace atm {

Coefficient::Coefficient(const Grid& grid, const Field& k, double k_lower, double k_upper)
    : grid_(grid), k_lower_(k_lower), k_upper_(k_upper) {
    if (!(k_lower > 0.0) || !(k_lower <= k_upper) || !std::isfinite(k_upper)) {
        std::ostringstream msg;
        msg << "coefficient bounds must satisfy 0 < k_lower <= k_upper, got [" << k_lower << ", "
            << k_upper << "]";
        throw std::invalid_argument(msg.str());
    }
    const double h1 = grid.h1();
    const double h2 = grid.h2();
    face1_.reserve(static_cast<std::size_t>(grid.cells1()) * grid.n2());
    for (int i2 = 1; i2 <= grid.n2(); ++i2) {
        for (int i1 = 0; i1 < grid.cells1(); ++i1) face1_.push_back(k(i1 * h1 + 0.5 * h1, i2 * h2));
    }
    face2_.reserve(static_cast<std::size_t>(grid.n1()) * grid.cells2());
    for (int i2 = 0; i2 < grid.cells2(); ++i2) {
        for (int i1 = 1; i1 <= grid.n1(); ++i1) face2_.push_back(k(i1 * h1, i2 * h2 + 0.5 * h2));
    }
    constant_ = true;
    const double first = face1_.front();
    auto check = [&](double v) {
        if (!(v >= k_lower_ && v <= k_upper_)) {
            std::ostringstream msg;
            msg << "coefficient sample " << v << " outside [" << k_lower_ << ", " << k_upper_ << "]";
            throw std::invalid_argument(msg.str());
        }
        if (v != first) constant_ = false;
    };
    for (double v : face1_) check(v);
    for (double v : face2_) check(v);
    build_weights();
}

Coefficient Coefficient::constant(const Grid& grid, double k) {
    return Coefficient(grid, [k](double, double) { return k; }, k, k);
}

void Coefficient::build_weights() {
    const std::size_t n = grid_.size();
    west_.assign(n, 0.0);
    east_.assign(n, 0.0);
    south_.assign(n, 0.0);
    north_.assign(n, 0.0);
    const double inv1 = 1.0 / (grid_.h1() * grid_.h1());
    const double inv2 = 1.0 / (grid_.h2() * grid_.h2());
    for (int i2 = 1; i2 <= grid_.n2(); ++i2) {
        for (int i1 = 1; i1 <= grid_.n1(); ++i1) {
            const std::size_t p = grid_.index(i1, i2);
            west_[p] = face1(i1 - 1, i2) * inv1;
            east_[p] = face1(i1, i2) * inv1;
            south_[p] = face2(i1, i2 - 1) * inv2;
            north_[p] = face2(i1, i2) * inv2;
        }
    }
}

SpectralBounds spectral_bounds(const Coefficient& k) {
    const Grid& g = k.grid();
    auto lo = [](double h, double l) {
        const double s = std::sin(std::numbers::pi * h / (2.0 * l));
        return 4.0 / (h * h) * s * s;
    };
    auto hi = [](double h, double l) {
        const double c = std::cos(std::numbers::pi * h / (2.0 * l));
        return 4.0 / (h * h) * c * c;
    };
    SpectralBounds b;
    b.delta1 = lo(g.h1(), g.l1());
    b.delta2 = lo(g.h2(), g.l2());
    b.Delta1 = hi(g.h1(), g.l1());
    b.Delta2 = hi(g.h2(), g.l2());
    b.delta = b.delta1 + b.delta2;
    b.Delta = b.Delta1 + b.Delta2;
    b.lower = k.k_lower() * b.delta;
    b.upper = k.k_upper() * b.Delta;
    return b;
}

double mode_eigenvalue(const Grid& grid, int m1, int m2) {
    auto part = [](int m, double h, double l) {
        const double s = std::sin(m * std::numbers::pi * h / (2.0 * l));
        return 4.0 / (h * h) * s * s;
    };
    return part(m1, grid.h1(), grid.l1()) + part(m2, grid.h2(), grid.l2());
}

namespace {

void check_grid(const Coefficient& k, const GridFunction& y) {
    if (!(k.grid() == y.grid())) throw IncompatibleGrids("coefficient and grid function live on different grids");
}

GridFunction apply_stencil(kernels::StencilFn fn, const Coefficient& k, const GridFunction& y) {
    check_grid(k, y);
    GridFunction out(y.grid());
    fn(k.stencil(), y.data(), out.data());
    return out;
}

// (E + c*A1)(E + c*A2) y
GridFunction factor_pair(const Coefficient& k, double c, const GridFunction& y) {
    GridFunction z = apply_A2(k, y);
    z *= c;
    z += y;
    GridFunction out = apply_A1(k, z);
    out *= c;
    out += z;
    return out;
}

}  // namespace

GridFunction apply_D1(const Coefficient& k, const GridFunction& y) {
    return apply_stencil(kernels::active_kernels().d1, k, y);
}

GridFunction apply_D2(const Coefficient& k, const GridFunction& y) {
    return apply_stencil(kernels::active_kernels().d2, k, y);
}

GridFunction apply_A(const Coefficient& k, const GridFunction& y) {
    return apply_stencil(kernels::active_kernels().a, k, y);
}

GridFunction apply_A1(const Coefficient& k, const GridFunction& y) {
    return apply_stencil(kernels::active_kernels().a1, k, y);
}

GridFunction apply_A2(const Coefficient& k, const GridFunction& y) {
    return apply_stencil(kernels::active_kernels().a2, k, y);
}

GridFunction apply_A1A2(const Coefficient& k, const GridFunction& y) { return apply_A1(k, apply_A2(k, y)); }

GridFunction apply_B(const Coefficient& k, double sigma, double tau, const GridFunction& y) {
    return factor_pair(k, sigma * tau, y);
}

GridFunction apply_G_hyperbolic(const Coefficient& k, double sigma, double tau, const GridFunction& y) {
    return factor_pair(k, sigma * (tau * tau), y);
}

GridFunction apply_R_hyperbolic(const Coefficient& k, double sigma, double tau, const GridFunction& y) {
    GridFunction out = apply_G_hyperbolic(k, sigma, tau, y);
    out.axpy(-0.25 * tau * tau, apply_A(k, y));
    return out;
}

GridFunction apply_C(const Coefficient& k, double sigma, double tau, const GridFunction& y) {
    GridFunction out = y;
    out.axpy(sigma * tau, apply_A(k, y));
    return out;
}

GridFunction apply_R_mlatm(const Coefficient& k, double sigma, double tau, const GridFunction& y) {
    GridFunction out = 0.5 * tau * GridFunction(y);
    out.axpy(0.25 * tau * tau * (2.0 * sigma - 1.0), apply_A(k, y));
    out.axpy(sigma * sigma * tau * tau * tau, apply_A1A2(k, y));
    return out;
}

double estimate_norm_A(const Coefficient& k, double tol) {
    NormEstimateOptions options;
    options.tol = tol;
    return estimate_norm_A(k, options);
}

double estimate_norm_A(const Coefficient& k, const NormEstimateOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("power iteration tolerance must be positive");
    const Grid& g = k.grid();
    const kernels::KernelTable& kt = kernels::active_kernels();

    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    std::vector<double> v(g.size());
    std::vector<double> w(g.size());
    for (double& x : v) x = uniform(rng);

    auto normalize = [&](std::vector<double>& x) {
        const double n = std::sqrt(kt.dot(x.data(), x.data(), x.size()));
        for (double& e : x) e /= n;
    };
    normalize(v);

    double estimate = 0.0;
    for (std::int64_t it = 1; it <= options.max_iterations; ++it) {
        kt.a(k.stencil(), v.data(), w.data());
        const double rq = kt.dot(w.data(), v.data(), v.size());
        if (it > 1 && std::abs(rq - estimate) < options.tol * std::abs(rq)) return rq;
        estimate = rq;
        v.swap(w);
        normalize(v);
    }
    throw ConvergenceFailure("power iteration for ||A|| did not converge", estimate, options.max_iterations);
}

LinearOperator bind_A(const Coefficient& k) {
    return [&k](const GridFunction& y) { return apply_A(k, y); };
}

}  // namespace atm
