#include "atm/kernels.hpp"

#if defined(ATM_HAVE_AVX2)

#include <immintrin.h>

#include "stencil_rows.hpp"

namespace atm::kernels {
namespace {

struct Node {
    double c, w, e, s, n;
};

struct Lanes {
    __m256d c, w, e, s, n;
};

// Interior columns 1..n1-2 run four at a time; the first and last column
// and the remainder use the scalar form of the same expression.
template <class ScalarFn, class VectorFn>
void for_each_row(const StencilView& st, const double* y, double* out, ScalarFn scalar, VectorFn vec) {
    const int n1 = st.n1;
    for (int j = 0; j < st.n2; ++j) {
        const RowPointers r = row_pointers(st, y, j);
        const std::size_t base = static_cast<std::size_t>(j) * static_cast<std::size_t>(n1);
        auto scalar_at = [&](int i) {
            const Node nd{r.here[i], i > 0 ? r.here[i - 1] : 0.0, i + 1 < n1 ? r.here[i + 1] : 0.0,
                          r.south[i], r.north[i]};
            out[base + i] = scalar(base + i, nd);
        };
        scalar_at(0);
        int i = 1;
        for (; i + 4 <= n1 - 1; i += 4) {
            const Lanes l{_mm256_loadu_pd(r.here + i), _mm256_loadu_pd(r.here + i - 1),
                          _mm256_loadu_pd(r.here + i + 1), _mm256_loadu_pd(r.south + i),
                          _mm256_loadu_pd(r.north + i)};
            _mm256_storeu_pd(out + base + i, vec(base + i, l));
        }
        for (; i < n1; ++i) scalar_at(i);
    }
}

inline __m256d w8(const double* p, std::size_t at) { return _mm256_loadu_pd(p + at); }

inline __m256d term(__m256d weight, __m256d c, __m256d nb) {
    return _mm256_mul_pd(weight, _mm256_sub_pd(c, nb));
}

void d1(const StencilView& s, const double* y, double* out) {
    for_each_row(
        s, y, out,
        [&](std::size_t p, const Node& v) { return s.east[p] * (v.c - v.e) + s.west[p] * (v.c - v.w); },
        [&](std::size_t p, const Lanes& v) {
            return _mm256_add_pd(term(w8(s.east, p), v.c, v.e), term(w8(s.west, p), v.c, v.w));
        });
}

void d2(const StencilView& s, const double* y, double* out) {
    for_each_row(
        s, y, out,
        [&](std::size_t p, const Node& v) { return s.north[p] * (v.c - v.n) + s.south[p] * (v.c - v.s); },
        [&](std::size_t p, const Lanes& v) {
            return _mm256_add_pd(term(w8(s.north, p), v.c, v.n), term(w8(s.south, p), v.c, v.s));
        });
}

void a(const StencilView& s, const double* y, double* out) {
    for_each_row(
        s, y, out,
        [&](std::size_t p, const Node& v) {
            return (s.east[p] * (v.c - v.e) + s.west[p] * (v.c - v.w)) +
                   (s.north[p] * (v.c - v.n) + s.south[p] * (v.c - v.s));
        },
        [&](std::size_t p, const Lanes& v) {
            const __m256d x1 = _mm256_add_pd(term(w8(s.east, p), v.c, v.e), term(w8(s.west, p), v.c, v.w));
            const __m256d x2 = _mm256_add_pd(term(w8(s.north, p), v.c, v.n), term(w8(s.south, p), v.c, v.s));
            return _mm256_add_pd(x1, x2);
        });
}

double half_diagonal(const StencilView& s, std::size_t p) {
    return 0.5 * ((s.east[p] + s.west[p]) + (s.north[p] + s.south[p]));
}

__m256d half_diagonal(const StencilView& s, std::size_t p, int) {
    const __m256d sum = _mm256_add_pd(_mm256_add_pd(w8(s.east, p), w8(s.west, p)),
                                      _mm256_add_pd(w8(s.north, p), w8(s.south, p)));
    return _mm256_mul_pd(_mm256_set1_pd(0.5), sum);
}

// d*c - (wa*a + wb*b), same association as the scalar kernel
__m256d split_term(__m256d d, __m256d c, __m256d wa, __m256d a, __m256d wb, __m256d b) {
    return _mm256_sub_pd(_mm256_mul_pd(d, c), _mm256_add_pd(_mm256_mul_pd(wa, a), _mm256_mul_pd(wb, b)));
}

void a1(const StencilView& s, const double* y, double* out) {
    for_each_row(
        s, y, out,
        [&](std::size_t p, const Node& v) { return half_diagonal(s, p) * v.c - (s.east[p] * v.e + s.north[p] * v.n); },
        [&](std::size_t p, const Lanes& v) {
            return split_term(half_diagonal(s, p, 0), v.c, w8(s.east, p), v.e, w8(s.north, p), v.n);
        });
}

void a2(const StencilView& s, const double* y, double* out) {
    for_each_row(
        s, y, out,
        [&](std::size_t p, const Node& v) { return half_diagonal(s, p) * v.c - (s.west[p] * v.w + s.south[p] * v.s); },
        [&](std::size_t p, const Lanes& v) {
            return split_term(half_diagonal(s, p, 0), v.c, w8(s.west, p), v.w, w8(s.south, p), v.s);
        });
}

double dot(const double* x, const double* y, std::size_t n) {
    const std::size_t n4 = n - n % 4;
    __m256d acc = _mm256_setzero_pd();
    for (std::size_t i = 0; i < n4; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    alignas(32) double lanes[4];
    _mm256_store_pd(lanes, acc);
    double sum = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
    for (std::size_t i = n4; i < n; ++i) sum += x[i] * y[i];
    return sum;
}

}  // namespace

const KernelTable* avx2_kernels() noexcept {
    static const KernelTable table{"avx2", d1, d2, a, a1, a2, dot};
    static const bool supported = __builtin_cpu_supports("avx2");
    return supported ? &table : nullptr;
}

}  // namespace atm::kernels

#else

namespace atm::kernels {
const KernelTable* avx2_kernels() noexcept { return nullptr; }
}  // namespace atm::kernels

#endif
