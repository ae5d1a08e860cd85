#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "atm/grid.hpp"
#include "atm/kernels.hpp"

namespace atm {

/// Diffusion coefficient k sampled at cell-face midpoints.
///
/// x1-faces k(x1 + h1/2, x2) are stored for i1 = 0..N1-1 and interior i2,
/// which includes the faces next to the west and east boundary. x2-faces
/// k(x1, x2 + h2/2) likewise for i2 = 0..N2-1 and interior i1. Samples are
/// taken once, at construction; the per-node stencil weights k/h^2 the
/// operators use are derived from them.
class Coefficient {
public:
    using Field = std::function<double(double x1, double x2)>;

    /// Samples `k` at the face midpoints. Throws std::invalid_argument if
    /// k_lower <= 0, k_lower > k_upper, or any sample leaves [k_lower, k_upper].
    Coefficient(const Grid& grid, const Field& k, double k_lower, double k_upper);

    static Coefficient constant(const Grid& grid, double k);

    const Grid& grid() const noexcept { return grid_; }
    double k_lower() const noexcept { return k_lower_; }
    double k_upper() const noexcept { return k_upper_; }

    /// True when every face sample equals the same value.
    bool is_constant() const noexcept { return constant_; }

    /// k(x1 + h1/2, x2) for 0 <= i1 <= N1-1, 1 <= i2 <= N2-1.
    double face1(int i1, int i2) const noexcept {
        return face1_[static_cast<std::size_t>(i2 - 1) * static_cast<std::size_t>(grid_.cells1()) +
                      static_cast<std::size_t>(i1)];
    }
    /// k(x1, x2 + h2/2) for 1 <= i1 <= N1-1, 0 <= i2 <= N2-1.
    double face2(int i1, int i2) const noexcept {
        return face2_[static_cast<std::size_t>(i2) * static_cast<std::size_t>(grid_.n1()) +
                      static_cast<std::size_t>(i1 - 1)];
    }

    kernels::StencilView stencil() const noexcept {
        return {grid_.n1(), grid_.n2(), west_.data(), east_.data(), south_.data(), north_.data()};
    }

    // Per-node weights k(face)/h^2.
    const std::vector<double>& west() const noexcept { return west_; }
    const std::vector<double>& east() const noexcept { return east_; }
    const std::vector<double>& south() const noexcept { return south_; }
    const std::vector<double>& north() const noexcept { return north_; }

private:
    void build_weights();

    Grid grid_;
    double k_lower_;
    double k_upper_;
    bool constant_ = false;
    std::vector<double> face1_;
    std::vector<double> face2_;
    std::vector<double> west_, east_, south_, north_;
};

/// Two-sided spectral bounds k_lower*delta*E <= A <= k_upper*Delta*E.
struct SpectralBounds {
    double delta1 = 0.0;
    double delta2 = 0.0;
    double Delta1 = 0.0;
    double Delta2 = 0.0;
    double delta = 0.0;
    double Delta = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

SpectralBounds spectral_bounds(const Coefficient& k);

/// Eigenvalue of the constant-coefficient A for mode (m1, m2), per unit k.
double mode_eigenvalue(const Grid& grid, int m1, int m2);

GridFunction apply_D1(const Coefficient& k, const GridFunction& y);
GridFunction apply_D2(const Coefficient& k, const GridFunction& y);
GridFunction apply_A(const Coefficient& k, const GridFunction& y);

/// Upper half of A: forward-neighbor couplings plus half of A's diagonal.
/// For constant k this is the forward flux difference.
GridFunction apply_A1(const Coefficient& k, const GridFunction& y);
/// Lower half, A - A1 = adjoint of A1.
GridFunction apply_A2(const Coefficient& k, const GridFunction& y);

/// A1(A2 y).
GridFunction apply_A1A2(const Coefficient& k, const GridFunction& y);

/// (E + sigma*tau*A1)(E + sigma*tau*A2) y.
GridFunction apply_B(const Coefficient& k, double sigma, double tau, const GridFunction& y);

/// (E + sigma*tau^2*A1)(E + sigma*tau^2*A2) y.
GridFunction apply_G_hyperbolic(const Coefficient& k, double sigma, double tau, const GridFunction& y);

/// G y - (tau^2/4) A y = (E + (sigma - 1/4) tau^2 A + sigma^2 tau^4 A1A2) y.
GridFunction apply_R_hyperbolic(const Coefficient& k, double sigma, double tau, const GridFunction& y);

/// (E + sigma*tau*A) y.
GridFunction apply_C(const Coefficient& k, double sigma, double tau, const GridFunction& y);

/// Energy weight of the three-level scheme:
/// (tau/2) y + (tau^2/4)(2 sigma - 1) A y + sigma^2 tau^3 A1A2 y.
GridFunction apply_R_mlatm(const Coefficient& k, double sigma, double tau, const GridFunction& y);

struct NormEstimateOptions {
    double tol = 1e-10;
    std::int64_t max_iterations = 10'000;
    std::uint64_t seed = 0x5eed'a7a7ULL;
};

/// Largest eigenvalue of A by power iteration, stopping when the Rayleigh
/// quotient's relative change drops below `tol`. Throws ConvergenceFailure
/// at the iteration cap.
double estimate_norm_A(const Coefficient& k, const NormEstimateOptions& options = {});
double estimate_norm_A(const Coefficient& k, double tol);

/// Bind an operator to a coefficient so it can be passed where a
/// LinearOperator is expected.
LinearOperator bind_A(const Coefficient& k);

}  // namespace atm
