#pragma once

// Numerical certification of the stability estimates and truncation orders:
// energy monitors for the four schemes, the semi-discrete eigenmode oracle,
// time-order studies and the explicit-scheme stability probe.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "atm/grid.hpp"
#include "atm/operators.hpp"
#include "atm/schemes.hpp"

namespace atm {

// ---------------------------------------------------------------------------
// Energy estimates
// ---------------------------------------------------------------------------

struct EnergyRecord {
    int level = 0;
    double time = 0.0;
    double energy = 0.0;
    double bound = 0.0;
    double violation = 0.0;           // max(0, energy - bound)
    double relative_violation = 0.0;  // violation / (first energy + accumulated forcing)
    double identity_defect = 0.0;     // hyperbolic energy balance only, relative
};

struct EnergyReport {
    std::string estimate;
    std::vector<EnergyRecord> records;
    /// Three-level schemes: the first level carrying an energy (n = 1). It has
    /// no predecessor and is excluded from the violation statistics.
    std::optional<EnergyRecord> startup;
    double max_relative_violation = 0.0;
    double max_identity_defect = 0.0;
};

/// E_n = ||v^n||_A^2 + (R w^n, w^n) of the three-level parabolic scheme.
/// Needs state.previous.
double mlatm_energy(const Coefficient& k, double sigma, double tau, const StepState& state);

/// E_n = ||v^n||_A^2 + (R w^n, w^n) of the hyperbolic scheme. Needs state.previous.
double hyperbolic_energy(const Coefficient& k, double sigma, double tau, const StepState& state);

/// Per-level energy monitor; feed it every level in order (it is an Observer).
class EnergyMonitor {
public:
    virtual ~EnergyMonitor() = default;
    virtual void operator()(const StepState& state) = 0;
    const EnergyReport& report() const noexcept { return report_; }

protected:
    void push(EnergyRecord record);
    EnergyReport report_;
};

/// Explicit scheme: ||y^{n+1}||_A^2 <= ||u0||_A^2 + tau/(2 eps) sum ||phi^k||^2.
class Theorem1Monitor final : public EnergyMonitor {
public:
    Theorem1Monitor(const ParabolicProblem& problem, const SchemeConfig& config, double epsilon);
    void operator()(const StepState& state) override;

private:
    const ParabolicProblem& problem_;
    SchemeConfig config_;
    double epsilon_;
    double initial_energy_ = 0.0;
    double forcing_sum_ = 0.0;
};

/// ATM scheme, sigma >= 1/2: ||y^{n+1}||_A^2 <= ||u0||_A^2 + tau/2 sum ||phi^k||^2.
class Theorem2Monitor final : public EnergyMonitor {
public:
    Theorem2Monitor(const ParabolicProblem& problem, const SchemeConfig& config);
    void operator()(const StepState& state) override;

private:
    const ParabolicProblem& problem_;
    SchemeConfig config_;
    double initial_energy_ = 0.0;
    double forcing_sum_ = 0.0;
};

/// MLATM scheme, sigma >= 1/2:
///   E_n = ||v^n||_A^2 + (R w^n, w^n),  R = tau/2 E + tau^2/4 (2 sigma - 1) A + sigma^2 tau^3 A1A2,
///   E_{n+1} <= E_n + tau/2 ||phi^n||^2_{C^{-1}},  C = E + sigma tau A.
class Theorem3Monitor final : public EnergyMonitor {
public:
    Theorem3Monitor(const ParabolicProblem& problem, const SchemeConfig& config);
    void operator()(const StepState& state) override;

private:
    const ParabolicProblem& problem_;
    SchemeConfig config_;
    std::optional<double> previous_energy_;
    double first_energy_ = 0.0;
    double forcing_sum_ = 0.0;
};

/// Hyperbolic scheme, sigma >= 1/4:
///   E_n = ||v^n||_A^2 + (R w^n, w^n),  R = E + (sigma - 1/4) tau^2 A + sigma^2 tau^4 A1A2.
/// Checks the balance E_{n+1} = E_n + tau (phi^n, w^{n+1} + w^n) and the growth
/// estimate E_{n+1} <= e^tau E_n + e^{0.75 tau} tau ||phi^n||^2_{R^{-1}}.
class Theorem4Monitor final : public EnergyMonitor {
public:
    Theorem4Monitor(const HyperbolicProblem& problem, const SchemeConfig& config);
    void operator()(const StepState& state) override;

private:
    const HyperbolicProblem& problem_;
    SchemeConfig config_;
    std::optional<double> previous_energy_;
    std::optional<GridFunction> previous_w_;
    double first_energy_ = 0.0;
    double forcing_sum_ = 0.0;
};

/// Levels y^0..y^N of one run.
using Trajectory = std::vector<GridFunction>;

/// Observer appending y^n to `levels`.
Observer record_levels(Trajectory& levels);

EnergyReport energy_theorem1(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config,
                             double epsilon = 0.1);
EnergyReport energy_theorem2(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config);
EnergyReport energy_theorem3(const Trajectory& levels, const ParabolicProblem& problem, const SchemeConfig& config);
EnergyReport energy_theorem4(const Trajectory& levels, const HyperbolicProblem& problem, const SchemeConfig& config);

// ---------------------------------------------------------------------------
// SPD solve for the dual norms
// ---------------------------------------------------------------------------

struct SpdSolveOptions {
    double tol = 1e-12;
    /// 0 means 5 x unknown count.
    std::int64_t max_iterations = 0;
};

/// Conjugate gradients for M x = b with M symmetric positive definite.
/// Throws ConvergenceFailure (carrying the last relative residual) at the cap.
GridFunction solve_spd(const LinearOperator& apply_m, const GridFunction& b, const SpdSolveOptions& options = {});

/// (M^{-1} phi, phi)
double dual_norm_squared(const LinearOperator& apply_m, const GridFunction& phi, const SpdSolveOptions& options = {});

// ---------------------------------------------------------------------------
// Semi-discrete eigenmode oracle
// ---------------------------------------------------------------------------

enum class Equation { parabolic, hyperbolic };

/// Mode forcing g(t) e_m with g(t) = amplitude * exp(rate t) or amplitude * cos(rate t).
struct ModeForcing {
    enum class Kind { none, exponential, cosine };
    Kind kind = Kind::none;
    double amplitude = 0.0;
    double rate = 0.0;

    double operator()(double t) const noexcept;
};

/// Constant-coefficient problem whose data are multiples of the discrete
/// eigenfunction e_m(x) = sin(m1 pi x1/l1) sin(m2 pi x2/l2).
struct EigenmodeProblem {
    Coefficient coefficient;
    Equation equation = Equation::parabolic;
    int m1 = 1;
    int m2 = 1;
    double initial_amplitude = 1.0;
    double velocity_amplitude = 0.0;
    ModeForcing forcing;
    double horizon = 1.0;

    /// lambda = k * sum (4/h^2) sin^2(m pi h / 2l). Throws UnsupportedProblem
    /// for a variable coefficient.
    double eigenvalue() const;
    GridFunction mode() const;

    ParabolicProblem parabolic() const;
    HyperbolicProblem hyperbolic() const;
};

/// Closed-form amplitude c(t) of c' + lambda c = g or c'' + lambda c = g.
double mode_amplitude(const EigenmodeProblem& problem, double t);

/// Exact solution of the semi-discrete system at time t: c(t) e_m.
GridFunction semidiscrete_oracle(const EigenmodeProblem& problem, double t);

// ---------------------------------------------------------------------------
// Time-order studies
// ---------------------------------------------------------------------------

struct ConvergenceRow {
    double h = 0.0;  // |h| = sqrt(h1^2 + h2^2)
    double tau = 0.0;
    double error_a = 0.0;
    double error_l2 = 0.0;
    double order = 0.0;  // vs previous row; NaN when undefined
    bool blew_up = false;
};

struct ConvergenceTable {
    std::vector<ConvergenceRow> rows;
    /// Least-squares slope of log error_A against log tau; NaN when fewer
    /// than two rows have a positive finite error.
    double fitted_order = 0.0;
};

/// Runs `kind` on the eigenmode problem for each tau (fixed grid) and
/// measures the error at the horizon against the semi-discrete oracle.
ConvergenceTable time_order_study(SchemeKind kind, double sigma, const EigenmodeProblem& problem,
                                  const std::vector<double>& taus,
                                  SweepOrder order = SweepOrder::lexicographic);

/// Least-squares slope of log(num.error_A / den.error_A) against log tau.
double error_ratio_order(const ConvergenceTable& num, const ConvergenceTable& den);

/// Least-squares slope of log y against log x over entries with finite
/// positive values; NaN with fewer than two.
double fit_log_slope(const std::vector<double>& x, const std::vector<double>& y);

/// Expected order for a scheme: explicit 1, atm/mlatm 2 and 3 at sigma = 1/2
/// and 1 otherwise, hyperbolic 2.
double target_order(SchemeKind kind, double sigma);

// ---------------------------------------------------------------------------
// Explicit-scheme stability threshold
// ---------------------------------------------------------------------------

struct StabilityRun {
    double ratio = 0.0;  // tau / tau0
    double tau = 0.0;
    bool nonincreasing = false;  // ||y^n||_A never grew over the run
    double growth = 0.0;         // max ||y^n||_A / ||y^0||_A within the growth window
    bool unstable = false;       // growth >= threshold or blow-up
    std::optional<BlowUp> blow_up;
};

struct StabilityProbeOptions {
    int steps = 500;
    int growth_window = 200;
    double growth_threshold = 10.0;
    double bracket_width = 0.002;  // bisection stops at this ratio width
    NormEstimateOptions norm_estimate;
};

struct StabilityReport {
    double norm_a = 0.0;
    double tau0 = 0.0;
    std::vector<StabilityRun> runs;  // the requested ratios, in order
    double stable_ratio = 0.0;       // largest ratio with nonincreasing ||y||_A
    double unstable_ratio = 0.0;     // smallest ratio found growing
    /// Both ends of the bracket lie within `tolerance` of tau0.
    bool brackets_tau0(double tolerance) const noexcept;
};

/// Runs the explicit scheme at tau = ratio * 2/||A|| for every ratio, then
/// bisects between the largest nonincreasing and the smallest non-monotone
/// ratio. Uses problem.initial, or the top discrete mode when it is empty.
StabilityReport stability_probe(const ParabolicProblem& problem, const std::vector<double>& ratios,
                                const StabilityProbeOptions& options = {});

}  // namespace atm
