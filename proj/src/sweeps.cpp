#include "atm/sweeps.hpp"

#include <algorithm>
#include <span>
#include <sstream>
#include <stdexcept>

#include "atm/errors.hpp"

namespace atm {
namespace {

void check_inputs(const Coefficient& k, double c, const GridFunction& b) {
    if (!(c >= 0.0)) {
        std::ostringstream msg;
        msg << "sweep coefficient must be nonnegative, got " << c;
        throw std::domain_error(msg.str());
    }
    if (!(k.grid() == b.grid())) throw IncompatibleGrids("coefficient and right side live on different grids");
}

// Visits (i, j), 0-based, so that (i+1, j) and (i, j+1) come first when
// `descending`, or (i-1, j) and (i, j-1) come first otherwise.
template <class NodeFn>
void visit(int n1, int n2, bool descending, SweepOrder order, NodeFn node) {
    if (order == SweepOrder::lexicographic) {
        if (descending) {
            for (int j = n2 - 1; j >= 0; --j)
                for (int i = n1 - 1; i >= 0; --i) node(i, j);
        } else {
            for (int j = 0; j < n2; ++j)
                for (int i = 0; i < n1; ++i) node(i, j);
        }
        return;
    }
    const int last = (n1 - 1) + (n2 - 1);
    for (int step = 0; step <= last; ++step) {
        const int d = descending ? last - step : step;
        const int j_lo = std::max(0, d - (n1 - 1));
        const int j_hi = std::min(n2 - 1, d);
        for (int j = j_lo; j <= j_hi; ++j) node(d - j, j);
    }
}

// Diagonal of A1 and of A2; must match the stencil kernels bit for bit.
double half_diagonal(double east, double west, double north, double south) {
    return 0.5 * ((east + west) + (north + south));
}

void upper_sweep(const Coefficient& k, double c, std::span<const double> b, std::span<double> x,
                 SweepOrder order) {
    const Grid& g = k.grid();
    const int n1 = g.n1();
    const int n2 = g.n2();
    const double* east = k.east().data();
    const double* north = k.north().data();
    const double* west = k.west().data();
    const double* south = k.south().data();
    visit(n1, n2, true, order, [&](int i, int j) {
        const std::size_t p = static_cast<std::size_t>(j) * n1 + i;
        const double xe = i + 1 < n1 ? x[p + 1] : 0.0;
        const double xn = j + 1 < n2 ? x[p + n1] : 0.0;
        x[p] = (b[p] + c * (east[p] * xe + north[p] * xn)) / (1.0 + c * half_diagonal(east[p], west[p], north[p], south[p]));
    });
}

void lower_sweep(const Coefficient& k, double c, std::span<const double> b, std::span<double> x,
                 SweepOrder order) {
    const Grid& g = k.grid();
    const int n1 = g.n1();
    const double* west = k.west().data();
    const double* south = k.south().data();
    const double* east = k.east().data();
    const double* north = k.north().data();
    visit(n1, g.n2(), false, order, [&](int i, int j) {
        const std::size_t p = static_cast<std::size_t>(j) * n1 + i;
        const double xw = i > 0 ? x[p - 1] : 0.0;
        const double xs = j > 0 ? x[p - n1] : 0.0;
        x[p] = (b[p] + c * (west[p] * xw + south[p] * xs)) / (1.0 + c * half_diagonal(east[p], west[p], north[p], south[p]));
    });
}

}  // namespace

GridFunction solve_upper(const Coefficient& k, double c, const GridFunction& b, SweepOrder order) {
    check_inputs(k, c, b);
    GridFunction x(b.grid());
    upper_sweep(k, c, b.values(), x.values(), order);
    return x;
}

GridFunction solve_lower(const Coefficient& k, double c, const GridFunction& b, SweepOrder order) {
    check_inputs(k, c, b);
    GridFunction x(b.grid());
    lower_sweep(k, c, b.values(), x.values(), order);
    return x;
}

GridFunction solve_factorized(const Coefficient& k, double c, const GridFunction& b, SweepOrder order) {
    SweepWorkspace workspace(b.grid());
    return solve_factorized(k, c, b, order, workspace);
}

GridFunction solve_factorized(const Coefficient& k, double c, const GridFunction& b, SweepOrder order,
                              SweepWorkspace& workspace) {
    check_inputs(k, c, b);
    if (!(workspace.grid() == b.grid())) throw IncompatibleGrids("sweep workspace sized for a different grid");
    std::vector<double>& z = workspace.scratch();
    upper_sweep(k, c, b.values(), z, order);
    GridFunction x(b.grid());
    lower_sweep(k, c, z, x.values(), order);
    return x;
}

}  // namespace atm
