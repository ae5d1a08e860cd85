#include "atm/grid.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "atm/errors.hpp"
#include "atm/kernels.hpp"

namespace atm {

Grid::Grid(double l1, double l2, int cells1, int cells2)
    : l1_(l1), l2_(l2), cells1_(cells1), cells2_(cells2), h1_(0.0), h2_(0.0), cell_area_(0.0) {
    if (!(l1 > 0.0) || !(l2 > 0.0) || !std::isfinite(l1) || !std::isfinite(l2)) {
        throw std::invalid_argument("grid side lengths must be positive and finite");
    }
    if (cells1 < 2 || cells2 < 2) {
        std::ostringstream msg;
        msg << "grid needs at least 2 cells per direction, got " << cells1 << "x" << cells2;
        throw std::invalid_argument(msg.str());
    }
    h1_ = l1 / cells1;
    h2_ = l2 / cells2;
    cell_area_ = h1_ * h2_;
}

GridFunction::GridFunction(const Grid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

GridFunction::GridFunction(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
        std::ostringstream msg;
        msg << "grid function needs " << grid_.size() << " values, got " << values_.size();
        throw std::invalid_argument(msg.str());
    }
}

double GridFunction::at(int i1, int i2) const noexcept {
    if (i1 < 1 || i2 < 1 || i1 > grid_.n1() || i2 > grid_.n2()) return 0.0;
    return values_[grid_.index(i1, i2)];
}

GridFunction& GridFunction::operator+=(const GridFunction& other) {
    require_same_grid(*this, other);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += other.values_[p];
    return *this;
}

GridFunction& GridFunction::operator-=(const GridFunction& other) {
    require_same_grid(*this, other);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] -= other.values_[p];
    return *this;
}

GridFunction& GridFunction::operator*=(double s) noexcept {
    for (double& v : values_) v *= s;
    return *this;
}

GridFunction& GridFunction::axpy(double alpha, const GridFunction& x) {
    require_same_grid(*this, x);
    for (std::size_t p = 0; p < values_.size(); ++p) values_[p] += alpha * x.values_[p];
    return *this;
}

bool GridFunction::is_finite() const noexcept {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
GridFunction operator*(double s, GridFunction a) { return a *= s; }

void require_same_grid(const GridFunction& a, const GridFunction& b) {
    if (!(a.grid() == b.grid())) throw IncompatibleGrids("grid functions live on different grids");
}

double inner_product(const GridFunction& y, const GridFunction& w) {
    require_same_grid(y, w);
    return kernels::active_kernels().dot(y.data(), w.data(), y.size()) * y.grid().cell_area();
}

double norm(const GridFunction& y) { return std::sqrt(inner_product(y, y)); }

double energy_norm(const GridFunction& y, const LinearOperator& apply_d) {
    const GridFunction dy = apply_d(y);
    const double form = inner_product(dy, y);
    if (form >= 0.0) return std::sqrt(form);
    if (form < -1e-12 * inner_product(y, y)) {
        std::ostringstream msg;
        msg << "operator is not positive: (Dy, y) = " << form;
        throw OperatorNotPositive(msg.str());
    }
    return 0.0;
}

GridFunction sample(const Grid& grid, const SpaceTimeField& field, double t) {
    GridFunction out(grid);
    for (int i2 = 1; i2 <= grid.n2(); ++i2) {
        for (int i1 = 1; i1 <= grid.n1(); ++i1) {
            out[grid.index(i1, i2)] = field(grid.x1(i1), grid.x2(i2), t);
        }
    }
    return out;
}

}  // namespace atm
