#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace atm {

/// Uniform mesh over (0,l1)x(0,l2) with `cells` intervals per direction.
/// Nodes are x = (i1*h1, i2*h2), i = 0..cells; only 1..cells-1 are stored.
class Grid {
public:
    Grid(double l1, double l2, int cells1, int cells2);

    /// Unit square with the same cell count in both directions.
    static Grid unit_square(int cells) { return Grid(1.0, 1.0, cells, cells); }

    double l1() const noexcept { return l1_; }
    double l2() const noexcept { return l2_; }
    int cells1() const noexcept { return cells1_; }
    int cells2() const noexcept { return cells2_; }
    double h1() const noexcept { return h1_; }
    double h2() const noexcept { return h2_; }

    /// Interior node counts per direction.
    int n1() const noexcept { return cells1_ - 1; }
    int n2() const noexcept { return cells2_ - 1; }
    std::size_t size() const noexcept {
        return static_cast<std::size_t>(n1()) * static_cast<std::size_t>(n2());
    }

    /// Storage offset of interior node (i1, i2), both 1-based. x1 varies fastest.
    std::size_t index(int i1, int i2) const noexcept {
        return static_cast<std::size_t>(i2 - 1) * static_cast<std::size_t>(n1()) +
               static_cast<std::size_t>(i1 - 1);
    }

    double x1(int i1) const noexcept { return i1 * h1_; }
    double x2(int i2) const noexcept { return i2 * h2_; }

    /// Cell measure h1*h2 used by the discrete inner product.
    double cell_area() const noexcept { return cell_area_; }

    friend bool operator==(const Grid&, const Grid&) = default;

private:
    double l1_;
    double l2_;
    int cells1_;
    int cells2_;
    double h1_;
    double h2_;
    double cell_area_;
};

/// Scalar field on the interior nodes of a grid. Boundary values are zero
/// and never stored.
class GridFunction {
public:
    explicit GridFunction(const Grid& grid);
    GridFunction(const Grid& grid, std::vector<double> values);

    const Grid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<double> values() noexcept { return values_; }
    std::span<const double> values() const noexcept { return values_; }
    double* data() noexcept { return values_.data(); }
    const double* data() const noexcept { return values_.data(); }

    double& operator[](std::size_t p) noexcept { return values_[p]; }
    double operator[](std::size_t p) const noexcept { return values_[p]; }

    /// Value at node (i1, i2); boundary indices read as zero.
    double at(int i1, int i2) const noexcept;

    GridFunction& operator+=(const GridFunction& other);
    GridFunction& operator-=(const GridFunction& other);
    GridFunction& operator*=(double s) noexcept;

    /// this += alpha * x
    GridFunction& axpy(double alpha, const GridFunction& x);

    bool is_finite() const noexcept;

    friend bool operator==(const GridFunction&, const GridFunction&) = default;

private:
    Grid grid_;
    std::vector<double> values_;
};

GridFunction operator+(GridFunction a, const GridFunction& b);
GridFunction operator-(GridFunction a, const GridFunction& b);
GridFunction operator*(double s, GridFunction a);

/// Throws IncompatibleGrids unless both functions live on the same grid.
void require_same_grid(const GridFunction& a, const GridFunction& b);

/// (y, w) = sum y*w*h1*h2 over interior nodes.
double inner_product(const GridFunction& y, const GridFunction& w);

double norm(const GridFunction& y);

/// Operator application y -> D y on grid functions.
using LinearOperator = std::function<GridFunction(const GridFunction&)>;

/// sqrt((D y, y)). Throws OperatorNotPositive if the form is below
/// -1e-12 (y, y); tiny negative rounding is clamped to zero.
double energy_norm(const GridFunction& y, const LinearOperator& apply_d);

using SpaceTimeField = std::function<double(double x1, double x2, double t)>;

/// Evaluates `field` at the interior nodes at time t.
GridFunction sample(const Grid& grid, const SpaceTimeField& field, double t = 0.0);

}  // namespace atm
