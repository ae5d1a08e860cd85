#pragma once

#include <cstddef>
#include <vector>

#include "atm/kernels.hpp"

namespace atm::kernels {
// Internal linkage: this header is compiled under different ISA flags.
namespace {

struct RowPointers {
    const double* here;
    const double* south;  // zero row on the first grid row
    const double* north;  // zero row on the last grid row
};

const double* zero_row(int n) {
    thread_local std::vector<double> zeros;
    if (zeros.size() < static_cast<std::size_t>(n)) zeros.assign(static_cast<std::size_t>(n), 0.0);
    return zeros.data();
}

RowPointers row_pointers(const StencilView& s, const double* y, int j) {
    const std::size_t n1 = static_cast<std::size_t>(s.n1);
    const double* here = y + static_cast<std::size_t>(j) * n1;
    const double* zeros = zero_row(s.n1);
    return {here, j > 0 ? here - n1 : zeros, j + 1 < s.n2 ? here + n1 : zeros};
}

}  // namespace
}  // namespace atm::kernels
