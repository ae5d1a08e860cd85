#include "atm/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "atm/errors.hpp"

namespace atm {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

GridFunction forcing_at(const Grid& grid, const SpaceTimeField& f, double t) {
    if (!f) return GridFunction(grid);
    return sample(grid, f, t);
}

double a_form(const Coefficient& k, const GridFunction& y) { return inner_product(apply_A(k, y), y); }

double relative(double value, double scale) {
    if (value == 0.0) return 0.0;
    if (!(scale > 0.0)) return std::numeric_limits<double>::infinity();
    return value / scale;
}

}  // namespace

double mlatm_energy(const Coefficient& k, double sigma, double tau, const StepState& state) {
    const GridFunction v = state.average();
    const GridFunction w = state.difference_quotient(tau);
    return a_form(k, v) + inner_product(apply_R_mlatm(k, sigma, tau, w), w);
}

double hyperbolic_energy(const Coefficient& k, double sigma, double tau, const StepState& state) {
    const GridFunction v = state.average();
    const GridFunction w = state.difference_quotient(tau);
    return a_form(k, v) + inner_product(apply_R_hyperbolic(k, sigma, tau, w), w);
}

void EnergyMonitor::push(EnergyRecord record) {
    report_.max_relative_violation = std::max(report_.max_relative_violation, record.relative_violation);
    report_.max_identity_defect = std::max(report_.max_identity_defect, record.identity_defect);
    report_.records.push_back(record);
}

Theorem1Monitor::Theorem1Monitor(const ParabolicProblem& problem, const SchemeConfig& config, double epsilon)
    : problem_(problem), config_(config), epsilon_(epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
    report_.estimate = "theorem1";
}

void Theorem1Monitor::operator()(const StepState& state) {
    const double energy = a_form(problem_.coefficient, state.current);
    if (state.level == 0) {
        initial_energy_ = energy;
        push({0, state.time, energy, energy, 0.0, 0.0, 0.0});
        return;
    }
    const double t_prev = (state.level - 1) * config_.tau;
    const double phi = norm(forcing_at(problem_.grid(), problem_.forcing, t_prev));
    forcing_sum_ += config_.tau / (2.0 * epsilon_) * phi * phi;
    const double bound = initial_energy_ + forcing_sum_;
    const double violation = std::max(0.0, energy - bound);
    push({state.level, state.time, energy, bound, violation, relative(violation, bound), 0.0});
}

Theorem2Monitor::Theorem2Monitor(const ParabolicProblem& problem, const SchemeConfig& config)
    : problem_(problem), config_(config) {
    report_.estimate = "theorem2";
}

void Theorem2Monitor::operator()(const StepState& state) {
    const double energy = a_form(problem_.coefficient, state.current);
    if (state.level == 0) {
        initial_energy_ = energy;
        push({0, state.time, energy, energy, 0.0, 0.0, 0.0});
        return;
    }
    const double tau = config_.tau;
    const double sigma = config_.sigma;
    const double t = sigma * (state.level * tau) + (1.0 - sigma) * ((state.level - 1) * tau);
    const double phi = norm(forcing_at(problem_.grid(), problem_.forcing, t));
    forcing_sum_ += 0.5 * tau * phi * phi;
    const double bound = initial_energy_ + forcing_sum_;
    const double violation = std::max(0.0, energy - bound);
    push({state.level, state.time, energy, bound, violation, relative(violation, bound), 0.0});
}

Theorem3Monitor::Theorem3Monitor(const ParabolicProblem& problem, const SchemeConfig& config)
    : problem_(problem), config_(config) {
    report_.estimate = "theorem3";
}

void Theorem3Monitor::operator()(const StepState& state) {
    if (state.level == 0 || !state.previous) return;
    const Coefficient& k = problem_.coefficient;
    const double tau = config_.tau;
    const double sigma = config_.sigma;
    const double energy = mlatm_energy(k, sigma, tau, state);

    if (!previous_energy_) {
        first_energy_ = energy;
        previous_energy_ = energy;
        report_.startup = EnergyRecord{state.level, state.time, energy, energy, 0.0, 0.0, 0.0};
        return;
    }
    const double t = sigma * (state.level * tau) + (1.0 - sigma) * ((state.level - 1) * tau);
    const GridFunction phi = forcing_at(problem_.grid(), problem_.forcing, t);
    double forcing = 0.0;
    if (norm(phi) > 0.0) {
        const LinearOperator c = [&](const GridFunction& y) { return apply_C(k, sigma, tau, y); };
        forcing = 0.5 * tau * dual_norm_squared(c, phi);
    }
    forcing_sum_ += forcing;
    const double bound = *previous_energy_ + forcing;
    const double violation = std::max(0.0, energy - bound);
    push({state.level, state.time, energy, bound, violation, relative(violation, first_energy_ + forcing_sum_), 0.0});
    previous_energy_ = energy;
}

Theorem4Monitor::Theorem4Monitor(const HyperbolicProblem& problem, const SchemeConfig& config)
    : problem_(problem), config_(config) {
    report_.estimate = "theorem4";
}

void Theorem4Monitor::operator()(const StepState& state) {
    if (state.level == 0 || !state.previous) return;
    const Coefficient& k = problem_.coefficient;
    const double tau = config_.tau;
    const double sigma = config_.sigma;
    GridFunction w = state.difference_quotient(tau);
    const double energy = hyperbolic_energy(k, sigma, tau, state);

    if (!previous_energy_) {
        first_energy_ = energy;
        previous_energy_ = energy;
        previous_w_ = std::move(w);
        report_.startup = EnergyRecord{state.level, state.time, energy, energy, 0.0, 0.0, 0.0};
        return;
    }
    const GridFunction phi = forcing_at(problem_.grid(), problem_.forcing, (state.level - 1) * tau);
    const double work = tau * inner_product(phi, w + *previous_w_);
    double forcing = 0.0;
    if (norm(phi) > 0.0) {
        const LinearOperator r = [&](const GridFunction& y) { return apply_R_hyperbolic(k, sigma, tau, y); };
        forcing = std::exp(0.75 * tau) * tau * dual_norm_squared(r, phi);
    }
    forcing_sum_ += forcing;
    const double scale = first_energy_ + forcing_sum_;
    const double bound = std::exp(tau) * *previous_energy_ + forcing;
    const double violation = std::max(0.0, energy - bound);
    const double defect = std::abs(energy - *previous_energy_ - work);
    push({state.level, state.time, energy, bound, violation, relative(violation, scale), relative(defect, scale)});
    previous_energy_ = energy;
    previous_w_ = std::move(w);
}

Observer record_levels(Trajectory& levels) {
    return [&levels](const StepState& s) { levels.push_back(s.current); };
}

namespace {

template <class Monitor, class Problem, class... Extra>
EnergyReport replay(const Trajectory& levels, const Problem& problem, const SchemeConfig& config, Extra... extra) {
    Monitor monitor(problem, config, extra...);
    for (std::size_t n = 0; n < levels.size(); ++n) {
        StepState s{levels[n], std::nullopt, static_cast<int>(n), static_cast<double>(n) * config.tau};
        if (n > 0) s.previous = levels[n - 1];
        monitor(s);
    }
    return monitor.report();
}

}  // namespace

EnergyReport energy_theorem1(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config,
                             double epsilon) {
    return replay<Theorem1Monitor>(levels, problem, config, epsilon);
}

EnergyReport energy_theorem2(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config) {
    return replay<Theorem2Monitor>(levels, problem, config);
}

EnergyReport energy_theorem3(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config) {
    return replay<Theorem3Monitor>(levels, problem, config);
}

EnergyReport energy_theorem4(const Trajectory& levels, const HyperbolicProblem& problem, const SchemeConfig& config) {
    return replay<Theorem4Monitor>(levels, problem, config);
}

// ---------------------------------------------------------------------------

GridFunction solve_spd(const LinearOperator& apply_m, const GridFunction& b, const SpdSolveOptions& options) {
    if (!(options.tol > 0.0)) throw std::invalid_argument("solve_spd tolerance must be positive");
    const std::int64_t cap =
        options.max_iterations > 0 ? options.max_iterations : 5 * static_cast<std::int64_t>(b.size());
    GridFunction x(b.grid());
    const double b_norm = norm(b);
    if (b_norm == 0.0) return x;

    GridFunction r = b;
    GridFunction p = r;
    double rr = inner_product(r, r);
    for (std::int64_t it = 0; it < cap; ++it) {
        if (std::sqrt(rr) <= options.tol * b_norm) return x;
        const GridFunction mp = apply_m(p);
        const double pmp = inner_product(p, mp);
        if (!(pmp > 0.0)) throw OperatorNotPositive("solve_spd: operator is not positive definite");
        const double alpha = rr / pmp;
        x.axpy(alpha, p);
        r.axpy(-alpha, mp);
        const double rr_next = inner_product(r, r);
        const double beta = rr_next / rr;
        rr = rr_next;
        p *= beta;
        p += r;
    }
    if (std::sqrt(rr) <= options.tol * b_norm) return x;
    throw ConvergenceFailure("solve_spd did not reach the requested residual", std::sqrt(rr) / b_norm, cap);
}

double dual_norm_squared(const LinearOperator& apply_m, const GridFunction& phi, const SpdSolveOptions& options) {
    return inner_product(solve_spd(apply_m, phi, options), phi);
}

// ---------------------------------------------------------------------------

double ModeForcing::operator()(double t) const noexcept {
    switch (kind) {
        case Kind::none: return 0.0;
        case Kind::exponential: return amplitude * std::exp(rate * t);
        case Kind::cosine: return amplitude * std::cos(rate * t);
    }
    return 0.0;
}

double EigenmodeProblem::eigenvalue() const {
    if (!coefficient.is_constant()) {
        throw UnsupportedProblem("the semi-discrete oracle needs a constant coefficient");
    }
    const Grid& g = coefficient.grid();
    if (m1 < 1 || m2 < 1 || m1 > g.n1() || m2 > g.n2()) {
        std::ostringstream msg;
        msg << "mode (" << m1 << ", " << m2 << ") is not resolved by the grid";
        throw UnsupportedProblem(msg.str());
    }
    return coefficient.k_lower() * mode_eigenvalue(g, m1, m2);
}

namespace {

double mode_shape(const Grid& g, int m1, int m2, double x1, double x2) {
    return std::sin(m1 * std::numbers::pi * x1 / g.l1()) * std::sin(m2 * std::numbers::pi * x2 / g.l2());
}

}  // namespace

GridFunction EigenmodeProblem::mode() const {
    const Grid& g = coefficient.grid();
    const int a = m1;
    const int b = m2;
    return sample(g, [&](double x1, double x2, double) { return mode_shape(g, a, b, x1, x2); });
}

ParabolicProblem EigenmodeProblem::parabolic() const {
    const Grid g = coefficient.grid();
    const int a = m1;
    const int b = m2;
    ParabolicProblem p{coefficient, {}, {}, horizon};
    const double c0 = initial_amplitude;
    if (c0 != 0.0) p.initial = [g, a, b, c0](double x1, double x2) { return c0 * mode_shape(g, a, b, x1, x2); };
    if (forcing.kind != ModeForcing::Kind::none) {
        const ModeForcing f = forcing;
        p.forcing = [g, a, b, f](double x1, double x2, double t) { return f(t) * mode_shape(g, a, b, x1, x2); };
    }
    return p;
}

HyperbolicProblem EigenmodeProblem::hyperbolic() const {
    ParabolicProblem base = parabolic();
    HyperbolicProblem h{coefficient, std::move(base.forcing), std::move(base.initial), {}, horizon};
    const Grid g = coefficient.grid();
    const int a = m1;
    const int b = m2;
    const double c1 = velocity_amplitude;
    if (c1 != 0.0) h.velocity = [g, a, b, c1](double x1, double x2) { return c1 * mode_shape(g, a, b, x1, x2); };
    return h;
}

double mode_amplitude(const EigenmodeProblem& p, double t) {
    const double lambda = p.eigenvalue();
    const double c0 = p.initial_amplitude;
    const double a = p.forcing.amplitude;
    const double r = p.forcing.rate;
    using Kind = ModeForcing::Kind;

    if (p.equation == Equation::parabolic) {
        // c' + lambda c = g
        const double decay = std::exp(-lambda * t);
        switch (p.forcing.kind) {
            case Kind::none: return c0 * decay;
            case Kind::exponential: {
                if (lambda + r == 0.0) return (c0 + a * t) * decay;
                const double particular = a / (lambda + r);
                return (c0 - particular) * decay + particular * std::exp(r * t);
            }
            case Kind::cosine: {
                const double d = lambda * lambda + r * r;
                const double particular = a * (lambda * std::cos(r * t) + r * std::sin(r * t)) / d;
                return (c0 - a * lambda / d) * decay + particular;
            }
        }
        return kNaN;
    }

    // c'' + lambda c = g, c'(0) = c1
    const double s = std::sqrt(lambda);
    const double c1 = p.velocity_amplitude;
    const double cs = std::cos(s * t);
    const double sn = std::sin(s * t);
    switch (p.forcing.kind) {
        case Kind::none: return c0 * cs + c1 / s * sn;
        case Kind::exponential: {
            const double q = a / (r * r + lambda);
            return (c0 - q) * cs + (c1 - q * r) / s * sn + q * std::exp(r * t);
        }
        case Kind::cosine: {
            const double d = lambda - r * r;
            if (d == 0.0) return c0 * cs + c1 / s * sn + a * t * sn / (2.0 * s);
            const double q = a / d;
            return (c0 - q) * cs + c1 / s * sn + q * std::cos(r * t);
        }
    }
    return kNaN;
}

GridFunction semidiscrete_oracle(const EigenmodeProblem& problem, double t) {
    GridFunction e = problem.mode();
    e *= mode_amplitude(problem, t);
    return e;
}

// ---------------------------------------------------------------------------

double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i])) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    if (lx.size() < 2) return kNaN;
    const double n = static_cast<double>(lx.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxx > 0.0 ? sxy / sxx : kNaN;
}

double target_order(SchemeKind kind, double sigma) {
    switch (kind) {
        case SchemeKind::explicit_euler: return 1.0;
        case SchemeKind::atm: return sigma == 0.5 ? 2.0 : 1.0;
        case SchemeKind::mlatm: return sigma == 0.5 ? 3.0 : 1.0;
        case SchemeKind::hyperbolic_atm: return 2.0;
    }
    return kNaN;
}

ConvergenceTable time_order_study(SchemeKind kind, double sigma, const EigenmodeProblem& problem,
                                  const std::vector<double>& taus, SweepOrder order) {
    if (taus.empty()) throw std::invalid_argument("time_order_study needs at least one time step");
    const bool hyperbolic = kind == SchemeKind::hyperbolic_atm;
    if (hyperbolic != (problem.equation == Equation::hyperbolic)) {
        throw std::invalid_argument("scheme kind does not match the problem's equation type");
    }
    const Coefficient& k = problem.coefficient;
    const Grid& g = k.grid();
    const GridFunction exact = semidiscrete_oracle(problem, problem.horizon);
    const ParabolicProblem parabolic = problem.parabolic();
    const HyperbolicProblem hyper = problem.hyperbolic();

    ConvergenceTable table;
    std::vector<double> fit_tau, fit_err;
    for (double tau : taus) {
        SchemeConfig config = SchemeConfig::for_horizon(kind, sigma, tau, problem.horizon);
        config.order = order;
        const RunResult result = hyperbolic ? run(hyper, config) : run(parabolic, config);
        ConvergenceRow row;
        row.h = std::hypot(g.h1(), g.h2());
        row.tau = tau;
        if (result.blow_up) {
            row.blew_up = true;
            row.error_a = row.error_l2 = row.order = kNaN;
        } else {
            const GridFunction z = result.final_state.current - exact;
            row.error_a = std::sqrt(std::max(0.0, a_form(k, z)));
            row.error_l2 = norm(z);
            row.order = kNaN;
            if (!table.rows.empty()) {
                const ConvergenceRow& prev = table.rows.back();
                if (prev.error_a > 0.0 && row.error_a > 0.0 && std::isfinite(prev.error_a)) {
                    row.order = std::log(prev.error_a / row.error_a) / std::log(prev.tau / tau);
                }
            }
            fit_tau.push_back(tau);
            fit_err.push_back(row.error_a);
        }
        table.rows.push_back(row);
    }
    table.fitted_order = fit_log_slope(fit_tau, fit_err);
    return table;
}

double error_ratio_order(const ConvergenceTable& num, const ConvergenceTable& den) {
    std::vector<double> taus, ratios;
    for (const ConvergenceRow& a : num.rows) {
        for (const ConvergenceRow& b : den.rows) {
            if (a.tau == b.tau && !a.blew_up && !b.blew_up && b.error_a > 0.0) {
                taus.push_back(a.tau);
                ratios.push_back(a.error_a / b.error_a);
            }
        }
    }
    return fit_log_slope(taus, ratios);
}

// ---------------------------------------------------------------------------

bool StabilityReport::brackets_tau0(double tolerance) const noexcept {
    return stable_ratio >= 1.0 - tolerance && stable_ratio <= 1.0 + tolerance &&
           unstable_ratio >= 1.0 - tolerance && unstable_ratio <= 1.0 + tolerance && stable_ratio < unstable_ratio;
}

namespace {

StabilityRun probe_once(const ParabolicProblem& problem, const GridFunction& y0, double ratio, double tau0,
                        const StabilityProbeOptions& options) {
    StabilityRun out;
    out.ratio = ratio;
    out.tau = ratio * tau0;
    const Coefficient& k = problem.coefficient;
    SchemeConfig config;
    config.kind = SchemeKind::explicit_euler;
    config.tau = out.tau;
    config.steps = options.steps;

    const double start = std::sqrt(a_form(k, y0));
    double last = start;
    out.nonincreasing = true;
    out.growth = 1.0;
    StepState state{y0, std::nullopt, 0, 0.0};
    const double limit = 1e12 * (1.0 + norm(y0));
    for (int n = 1; n <= options.steps; ++n) {
        state = step_explicit(problem, config, state);
        const double y_norm = norm(state.current);
        if (!state.current.is_finite() || y_norm > limit) {
            out.blow_up = BlowUp{n, state.time, state.current.is_finite() ? y_norm : kNaN};
            out.nonincreasing = false;
            out.unstable = true;
            if (n <= options.growth_window) out.growth = std::numeric_limits<double>::infinity();
            return out;
        }
        const double e = std::sqrt(std::max(0.0, a_form(k, state.current)));
        if (e > last * (1.0 + 1e-12)) out.nonincreasing = false;
        if (n <= options.growth_window && start > 0.0) out.growth = std::max(out.growth, e / start);
        last = e;
    }
    out.unstable = out.growth >= options.growth_threshold;
    return out;
}

}  // namespace

StabilityReport stability_probe(const ParabolicProblem& problem, const std::vector<double>& ratios,
                                const StabilityProbeOptions& options) {
    const Coefficient& k = problem.coefficient;
    const Grid& g = k.grid();
    StabilityReport report;
    report.norm_a = estimate_norm_A(k, options.norm_estimate);
    report.tau0 = 2.0 / report.norm_a;

    GridFunction y0(g);
    if (problem.initial) {
        y0 = sample(g, [&](double x1, double x2, double) { return problem.initial(x1, x2); });
    } else {
        const int m1 = g.n1();
        const int m2 = g.n2();
        y0 = sample(g, [&](double x1, double x2, double) { return mode_shape(g, m1, m2, x1, x2); });
    }

    double lo = -1.0;
    double hi = std::numeric_limits<double>::infinity();
    for (double r : ratios) {
        StabilityRun run_r = probe_once(problem, y0, r, report.tau0, options);
        if (run_r.nonincreasing) lo = std::max(lo, r);
        else hi = std::min(hi, r);
        report.runs.push_back(run_r);
    }
    if (lo > 0.0 && std::isfinite(hi) && lo < hi) {
        while (hi - lo > options.bracket_width) {
            const double mid = 0.5 * (lo + hi);
            if (probe_once(problem, y0, mid, report.tau0, options).nonincreasing) lo = mid;
            else hi = mid;
        }
    }
    report.stable_ratio = lo;
    report.unstable_ratio = hi;
    return report;
}

}  // namespace atm
