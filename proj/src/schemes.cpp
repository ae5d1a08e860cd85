#include "atm/schemes.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "atm/errors.hpp"

namespace atm {

std::string_view to_string(SchemeKind kind) noexcept {
    switch (kind) {
        case SchemeKind::explicit_euler: return "explicit";
        case SchemeKind::atm: return "atm";
        case SchemeKind::mlatm: return "mlatm";
        case SchemeKind::hyperbolic_atm: return "hyperbolic-atm";
    }
    return "unknown";
}

SchemeKind parse_scheme_kind(std::string_view name) {
    if (name == "explicit") return SchemeKind::explicit_euler;
    if (name == "atm") return SchemeKind::atm;
    if (name == "mlatm") return SchemeKind::mlatm;
    if (name == "hyperbolic-atm") return SchemeKind::hyperbolic_atm;
    throw std::invalid_argument("unknown scheme kind '" + std::string(name) + "'");
}

bool is_three_level(SchemeKind kind) noexcept {
    return kind == SchemeKind::mlatm || kind == SchemeKind::hyperbolic_atm;
}

SchemeConfig SchemeConfig::for_horizon(SchemeKind kind, double sigma, double tau, double horizon) {
    if (!(tau > 0.0)) throw std::invalid_argument("time step must be positive");
    SchemeConfig c;
    c.kind = kind;
    c.sigma = sigma;
    c.tau = tau;
    c.steps = static_cast<int>(std::llround(horizon / tau));
    c.validate(horizon);
    return c;
}

std::vector<std::string> SchemeConfig::validate(double horizon) const {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("time step must be positive");
    if (!(sigma >= 0.0)) throw std::invalid_argument("weight sigma must be nonnegative");
    if (steps < 0) throw std::invalid_argument("step count must be nonnegative");
    if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
    // steps = 0 is a no-op run and carries no horizon.
    if (steps > 0 && std::abs(steps * tau - horizon) > 1e-12 * horizon) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "steps * tau = " << steps * tau << " does not match horizon " << horizon;
        throw std::invalid_argument(msg.str());
    }
    std::vector<std::string> warnings;
    if ((kind == SchemeKind::atm || kind == SchemeKind::mlatm) && sigma < 0.5) {
        warnings.emplace_back("sigma < 0.5: outside the unconditional stability range of the factorized scheme");
    }
    if (kind == SchemeKind::hyperbolic_atm && sigma < 0.25) {
        warnings.emplace_back("sigma < 0.25: outside the unconditional stability range of the hyperbolic scheme");
    }
    return warnings;
}

GridFunction StepState::average() const {
    if (!previous) throw StartupOrderError("average needs the previous level");
    GridFunction v = current + *previous;
    v *= 0.5;
    return v;
}

GridFunction StepState::difference_quotient(double tau) const {
    if (!previous) throw StartupOrderError("difference quotient needs the previous level");
    GridFunction w = current - *previous;
    w *= 1.0 / tau;
    return w;
}

namespace {

GridFunction sample_initial(const Grid& grid, const SpaceField& field) {
    if (!field) return GridFunction(grid);
    return sample(grid, [&](double x1, double x2, double) { return field(x1, x2); });
}

GridFunction sample_forcing(const Grid& grid, const SpaceTimeField& f, double t) {
    if (!f) return GridFunction(grid);
    return sample(grid, f, t);
}

// r = phi - A y
GridFunction residual(const Coefficient& k, const SpaceTimeField& f, double t, const GridFunction& y) {
    GridFunction r = sample_forcing(y.grid(), f, t);
    r -= apply_A(k, y);
    return r;
}

StepState advance(const StepState& state, GridFunction next, double tau, bool keep_previous) {
    StepState out{std::move(next), std::nullopt, state.level + 1, (state.level + 1) * tau};
    if (keep_previous) out.previous = state.current;
    return out;
}

void require_history(const StepState& state, const char* scheme) {
    if (!state.previous) {
        throw StartupOrderError(std::string(scheme) + " step needs y^{n-1}; run the startup procedure first");
    }
}

}  // namespace

StepState initial_state(const ParabolicProblem& problem) {
    return {sample_initial(problem.grid(), problem.initial), std::nullopt, 0, 0.0};
}

StepState step_explicit(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state) {
    const double t = state.level * config.tau;
    GridFunction next = state.current;
    next.axpy(config.tau, residual(problem.coefficient, problem.forcing, t, state.current));
    return advance(state, std::move(next), config.tau, false);
}

StepState step_atm(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state) {
    const double tau = config.tau;
    const double sigma = config.sigma;
    const double t = sigma * ((state.level + 1) * tau) + (1.0 - sigma) * (state.level * tau);
    const GridFunction r = residual(problem.coefficient, problem.forcing, t, state.current);
    const GridFunction d = solve_factorized(problem.coefficient, sigma * tau, r, config.order);
    GridFunction next = state.current;
    next.axpy(tau, d);
    return advance(state, std::move(next), tau, false);
}

StepState step_mlatm(const ParabolicProblem& problem, const SchemeConfig& config, const StepState& state) {
    require_history(state, "mlatm");
    const Coefficient& k = problem.coefficient;
    const double tau = config.tau;
    const double sigma = config.sigma;
    const double t = sigma * ((state.level + 1) * tau) + (1.0 - sigma) * (state.level * tau);
    // B (y^{n+1} - y^n)/tau = phi - A y^n + sigma^2 tau A1A2 (y^n - y^{n-1})
    GridFunction r = residual(k, problem.forcing, t, state.current);
    r.axpy(sigma * sigma * tau, apply_A1A2(k, state.current - *state.previous));
    const GridFunction d = solve_factorized(k, sigma * tau, r, config.order);
    GridFunction next = state.current;
    next.axpy(tau, d);
    return advance(state, std::move(next), tau, true);
}

StepState startup_mlatm(const ParabolicProblem& problem, const SchemeConfig& config) {
    const StepState zero = initial_state(problem);
    StepState one = step_atm(problem, config, zero);
    one.previous = zero.current;
    return one;
}

StepState step_hyperbolic(const HyperbolicProblem& problem, const SchemeConfig& config, const StepState& state) {
    require_history(state, "hyperbolic");
    const double tau = config.tau;
    const double tau2 = tau * tau;
    GridFunction r = residual(problem.coefficient, problem.forcing, state.level * tau, state.current);
    r *= tau2;
    const GridFunction d = solve_factorized(problem.coefficient, config.sigma * tau2, r, config.order);
    GridFunction next = 2.0 * GridFunction(state.current);
    next -= *state.previous;
    next += d;
    return advance(state, std::move(next), tau, true);
}

StepState startup_hyperbolic(const HyperbolicProblem& problem, const SchemeConfig& config) {
    const Grid& g = problem.grid();
    const double tau = config.tau;
    GridFunction y0 = sample_initial(g, problem.initial);
    GridFunction y1 = y0;
    y1.axpy(tau, sample_initial(g, problem.velocity));
    y1.axpy(0.5 * tau * tau, residual(problem.coefficient, problem.forcing, 0.0, y0));
    return {std::move(y1), std::move(y0), 1, tau};
}

namespace {

template <class Problem, class Startup, class Step>
RunResult integrate(const Problem& problem, const SchemeConfig& config, const std::vector<Observer>& observers,
                    StepState state, Startup startup, Step step) {
    auto notify = [&](const StepState& s) {
        for (const Observer& o : observers) o(s);
    };
    const double limit = 1e12 * (1.0 + norm(state.current));
    auto check = [&](const StepState& s) -> std::optional<BlowUp> {
        if (!s.current.is_finite()) return BlowUp{s.level, s.time, std::numeric_limits<double>::quiet_NaN()};
        const double n = norm(s.current);
        if (n > limit) return BlowUp{s.level, s.time, n};
        return std::nullopt;
    };

    notify(state);
    if (config.steps == 0) return {std::move(state), std::nullopt};
    if (startup) {
        StepState next = startup(problem, config);
        if (auto b = check(next)) return {std::move(next), b};
        state = std::move(next);
        notify(state);
    }
    while (state.level < config.steps) {
        StepState next = step(problem, config, state);
        if (auto b = check(next)) return {std::move(next), b};
        state = std::move(next);
        notify(state);
    }
    return {std::move(state), std::nullopt};
}

}  // namespace

RunResult run(const ParabolicProblem& problem, const SchemeConfig& config, const std::vector<Observer>& observers) {
    config.validate(problem.horizon);
    using StartupFn = StepState (*)(const ParabolicProblem&, const SchemeConfig&);
    switch (config.kind) {
        case SchemeKind::explicit_euler:
            return integrate(problem, config, observers, initial_state(problem), StartupFn{nullptr}, step_explicit);
        case SchemeKind::atm:
            return integrate(problem, config, observers, initial_state(problem), StartupFn{nullptr}, step_atm);
        case SchemeKind::mlatm:
            return integrate(problem, config, observers, initial_state(problem), StartupFn{startup_mlatm},
                             step_mlatm);
        case SchemeKind::hyperbolic_atm:
            break;
    }
    throw std::invalid_argument("hyperbolic-atm needs a hyperbolic problem");
}

RunResult run(const HyperbolicProblem& problem, const SchemeConfig& config, const std::vector<Observer>& observers) {
    config.validate(problem.horizon);
    if (config.kind != SchemeKind::hyperbolic_atm) {
        throw std::invalid_argument("hyperbolic problems are integrated with the hyperbolic-atm scheme");
    }
    using StartupFn = StepState (*)(const HyperbolicProblem&, const SchemeConfig&);
    StepState start{sample_initial(problem.grid(), problem.initial), std::nullopt, 0, 0.0};
    return integrate(problem, config, observers, std::move(start), StartupFn{startup_hyperbolic}, step_hyperbolic);
}

}  // namespace atm
