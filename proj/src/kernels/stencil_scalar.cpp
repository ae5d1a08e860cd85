#include "atm/kernels.hpp"

#include "stencil_rows.hpp"

namespace atm::kernels {
namespace {

template <class NodeFn>
void for_each_node(const StencilView& s, const double* y, double* out, NodeFn node) {
    for (int j = 0; j < s.n2; ++j) {
        const RowPointers r = row_pointers(s, y, j);
        const std::size_t base = static_cast<std::size_t>(j) * static_cast<std::size_t>(s.n1);
        for (int i = 0; i < s.n1; ++i) {
            const double yw = i > 0 ? r.here[i - 1] : 0.0;
            const double ye = i + 1 < s.n1 ? r.here[i + 1] : 0.0;
            out[base + i] = node(base + i, r.here[i], yw, ye, r.south[i], r.north[i]);
        }
    }
}

void d1(const StencilView& s, const double* y, double* out) {
    for_each_node(s, y, out, [&](std::size_t p, double c, double w, double e, double, double) {
        return s.east[p] * (c - e) + s.west[p] * (c - w);
    });
}

void d2(const StencilView& s, const double* y, double* out) {
    for_each_node(s, y, out, [&](std::size_t p, double c, double, double, double so, double no) {
        return s.north[p] * (c - no) + s.south[p] * (c - so);
    });
}

void a(const StencilView& s, const double* y, double* out) {
    for_each_node(s, y, out, [&](std::size_t p, double c, double w, double e, double so, double no) {
        return (s.east[p] * (c - e) + s.west[p] * (c - w)) +
               (s.north[p] * (c - no) + s.south[p] * (c - so));
    });
}

// Half of A's diagonal goes to each factor, which keeps A2 the adjoint of
// A1 when k varies.
double half_diagonal(const StencilView& s, std::size_t p) {
    return 0.5 * ((s.east[p] + s.west[p]) + (s.north[p] + s.south[p]));
}

void a1(const StencilView& s, const double* y, double* out) {
    for_each_node(s, y, out, [&](std::size_t p, double c, double, double e, double, double no) {
        return half_diagonal(s, p) * c - (s.east[p] * e + s.north[p] * no);
    });
}

void a2(const StencilView& s, const double* y, double* out) {
    for_each_node(s, y, out, [&](std::size_t p, double c, double w, double, double so, double) {
        return half_diagonal(s, p) * c - (s.west[p] * w + s.south[p] * so);
    });
}

double dot(const double* x, const double* y, std::size_t n) {
    const std::size_t n4 = n - n % 4;
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    for (std::size_t i = 0; i < n4; i += 4) {
        s0 += x[i] * y[i];
        s1 += x[i + 1] * y[i + 1];
        s2 += x[i + 2] * y[i + 2];
        s3 += x[i + 3] * y[i + 3];
    }
    double sum = (s0 + s1) + (s2 + s3);
    for (std::size_t i = n4; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{"scalar", d1, d2, a, a1, a2, dot};
    return table;
}

}  // namespace atm::kernels
