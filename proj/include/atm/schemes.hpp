#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "atm/grid.hpp"
#include "atm/operators.hpp"
#include "atm/sweeps.hpp"

namespace atm {

using SpaceField = std::function<double(double x1, double x2)>;

/// du/dt + A u = f, u(0) = u0, homogeneous Dirichlet data.
struct ParabolicProblem {
    Coefficient coefficient;
    SpaceTimeField forcing;  // empty means f = 0
    SpaceField initial;      // empty means u0 = 0
    double horizon = 1.0;

    const Grid& grid() const noexcept { return coefficient.grid(); }
};

/// d2u/dt2 + A u = f, u(0) = u0, du/dt(0) = v0.
struct HyperbolicProblem {
    Coefficient coefficient;
    SpaceTimeField forcing;
    SpaceField initial;
    SpaceField velocity;
    double horizon = 1.0;

    const Grid& grid() const noexcept { return coefficient.grid(); }
};

enum class SchemeKind { explicit_euler, atm, mlatm, hyperbolic_atm };

std::string_view to_string(SchemeKind kind) noexcept;
/// Accepts explicit, atm, mlatm, hyperbolic-atm. Throws std::invalid_argument.
SchemeKind parse_scheme_kind(std::string_view name);

bool is_three_level(SchemeKind kind) noexcept;

/// How y^1 of the three-level parabolic scheme is produced.
enum class StartupKind { atm };

struct SchemeConfig {
    SchemeKind kind = SchemeKind::atm;
    double sigma = 0.5;
    double tau = 0.0;
    int steps = 0;
    SweepOrder order = SweepOrder::lexicographic;
    StartupKind startup = StartupKind::atm;

    /// steps = round(T / tau); throws std::invalid_argument unless
    /// steps * tau matches T to 1e-12 relative.
    static SchemeConfig for_horizon(SchemeKind kind, double sigma, double tau, double horizon);

    /// Throws std::invalid_argument on tau <= 0, sigma < 0, steps < 0 or
    /// a steps*tau != horizon mismatch. Returns warnings for weights below
    /// the unconditional-stability thresholds.
    std::vector<std::string> validate(double horizon) const;
};

/// Solution levels y^n and, for three-level schemes, y^{n-1}.
struct StepState {
    GridFunction current;
    std::optional<GridFunction> previous;
    int level = 0;
    double time = 0.0;

    /// (y^n + y^{n-1}) / 2
    GridFunction average() const;
    /// (y^n - y^{n-1}) / tau
    GridFunction difference_quotient(double tau) const;
};

StepState initial_state(const ParabolicProblem& problem);

/// y^{n+1} = y^n + tau (phi^n - A y^n), phi^n = f(t^n).
StepState step_explicit(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state);

/// B (y^{n+1} - y^n)/tau + A y^n = phi^n with B = (E + sigma tau A1)(E + sigma tau A2)
/// and phi^n = f(sigma t^{n+1} + (1 - sigma) t^n).
StepState step_atm(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state);

/// Three-level scheme: the splitting term of the ATM scheme acts on the
/// second difference y^{n+1} - 2y^n + y^{n-1}. Throws StartupOrderError
/// without y^{n-1}.
StepState step_mlatm(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state);

/// y^0 = u0, y^1 from one ATM step with the same sigma and tau.
StepState startup_mlatm(const ParabolicProblem& problem, const SchemeConfig& config);

/// G (y^{n+1} - 2y^n + y^{n-1})/tau^2 + A y^n = phi^n, G = (E + sigma tau^2 A1)(E + sigma tau^2 A2).
StepState step_hyperbolic(const HyperbolicProblem& problem, const SchemeConfig& config, const StepState& state);

/// y^0 = u0, y^1 = y^0 + tau v0 + (tau^2/2)(f(0) - A y^0).
StepState startup_hyperbolic(const HyperbolicProblem& problem, const SchemeConfig& config);

using Observer = std::function<void(const StepState&)>;

struct BlowUp {
    int level = 0;
    double time = 0.0;
    double norm = 0.0;  // NaN when a non-finite value triggered it
};

struct RunResult {
    StepState final_state;
    std::optional<BlowUp> blow_up;
};

/// Integrates to level config.steps, calling every observer on level 0,
/// each startup level and each accepted step. Aborts (reporting the level)
/// when a value is non-finite or ||y^n|| > 1e12 (1 + ||y^0||).
RunResult run(const ParabolicProblem& problem, const SchemeConfig& config,
              const std::vector<Observer>& observers = {});
RunResult run(const HyperbolicProblem& problem, const SchemeConfig& config,
              const std::vector<Observer>& observers = {});

}  // namespace atm
