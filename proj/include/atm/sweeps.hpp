#pragma once

#include <vector>

#include "atm/grid.hpp"
#include "atm/operators.hpp"

namespace atm {

/// Node visiting order for the triangular sweeps. Both orders visit every
/// node after all of its dependencies and evaluate the same expression, so
/// the results are bit-identical.
enum class SweepOrder {
    lexicographic,  // row by row along the storage order
    wavefront,      // anti-diagonal by anti-diagonal; nodes on one diagonal are independent
};

/// Scratch for the intermediate vector of a factorized solve. One owner per
/// solve; concurrent solves need separate workspaces.
class SweepWorkspace {
public:
    explicit SweepWorkspace(const Grid& grid) : grid_(grid), scratch_(grid.size(), 0.0) {}

    const Grid& grid() const noexcept { return grid_; }
    std::vector<double>& scratch() noexcept { return scratch_; }

private:
    Grid grid_;
    std::vector<double> scratch_;
};

/// Solves (E + c*A1) x = b by a descending sweep:
///   x = [b + c*(wE*x(i1+1,i2) + wN*x(i1,i2+1))] / (1 + c*d/2),
/// with face weights wE = kE/h1^2 etc. and d = wE + wW + wN + wS.
/// Throws std::domain_error for c < 0.
GridFunction solve_upper(const Coefficient& k, double c, const GridFunction& b,
                         SweepOrder order = SweepOrder::lexicographic);

/// Solves (E + c*A2) x = b by an ascending sweep over backward neighbors.
GridFunction solve_lower(const Coefficient& k, double c, const GridFunction& b,
                         SweepOrder order = SweepOrder::lexicographic);

/// Solves (E + c*A1)(E + c*A2) x = b: upper sweep, then lower sweep.
GridFunction solve_factorized(const Coefficient& k, double c, const GridFunction& b,
                              SweepOrder order = SweepOrder::lexicographic);
GridFunction solve_factorized(const Coefficient& k, double c, const GridFunction& b, SweepOrder order,
                              SweepWorkspace& workspace);

}  // namespace atm
