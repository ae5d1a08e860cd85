#pragma once

// Data-parallel inner loops: five-point flux stencils and the inner product.
//
// Every variant evaluates each output with the same sequence of IEEE
// operations as the scalar reference, so results are bit-identical across
// variants. Builds must not contract a*b+c into FMA (-ffp-contract=off).

#include <cstddef>
#include <string_view>

namespace atm::kernels {

/// Per-node stencil weights k(face)/h^2 on the interior nodes, x1 fastest.
/// A weight multiplies (y(x) - y(neighbor)); neighbors outside the grid are 0.
struct StencilView {
    int n1 = 0;
    int n2 = 0;
    const double* west = nullptr;
    const double* east = nullptr;
    const double* south = nullptr;
    const double* north = nullptr;
};

using StencilFn = void (*)(const StencilView&, const double* y, double* out);

/// Dot product with a fixed reduction order: four interleaved partial sums
/// over the first n - n%4 entries, folded as (s0+s1)+(s2+s3), then the tail
/// added left to right.
using DotFn = double (*)(const double* a, const double* b, std::size_t n);

struct KernelTable {
    std::string_view name;
    StencilFn d1;  // east*(y-yE) + west*(y-yW)
    StencilFn d2;  // north*(y-yN) + south*(y-yS)
    StencilFn a;   // d1 + d2
    StencilFn a1;  // d/2*y - (east*yE + north*yN), d = east+west+north+south
    StencilFn a2;  // d/2*y - (west*yW + south*yS)
    DotFn dot;
};

const KernelTable& scalar_kernels() noexcept;

/// nullptr when the AVX2 variant was not compiled in or the CPU lacks AVX2.
const KernelTable* avx2_kernels() noexcept;

/// Best available table. Setting ATM_KIT_ISA=scalar in the environment
/// forces the reference kernels.
const KernelTable& active_kernels() noexcept;

}  // namespace atm::kernels
