#pragma once

// Config-file-driven experiments behind the atm-kit command line.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atm/schemes.hpp"
#include "atm/verify.hpp"

namespace atm {

/// Bad config file. `line` is 0 when the problem is not tied to one line
/// (cross-field validation); `keys` lists the offending section.key names.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& what, int line, std::vector<std::string> keys = {})
        : std::runtime_error(what), line_(line), keys_(std::move(keys)) {}
    int line() const noexcept { return line_; }
    const std::vector<std::string>& keys() const noexcept { return keys_; }

private:
    int line_;
    std::vector<std::string> keys_;
};

struct CoefficientSpec {
    enum class Kind { constant, checkerboard, expression };
    Kind kind = Kind::constant;
    double k_lower = 1.0;
    double k_upper = 1.0;
    int blocks = 4;
    std::string expression;
};

/// Initial displacement or velocity.
struct DataSpec {
    enum class Kind { zero, mode, random, expression };
    Kind kind = Kind::zero;
    int m1 = 1;
    int m2 = 1;
    double amplitude = 0.0;
    std::string expression;
};

struct ForcingSpec {
    enum class Kind { zero, mode_exp, mode_cos, expression };
    Kind kind = Kind::zero;
    int m1 = 1;
    int m2 = 1;
    double amplitude = 0.0;
    double rate = 0.0;
    std::string expression;
};

enum class StudyKind { none, convergence, stability, energy };
enum class Verbosity { quiet, normal, verbose };

struct ExperimentConfig {
    std::uint64_t seed = 0;

    // [problem]
    Equation equation = Equation::parabolic;
    double l1 = 1.0;
    double l2 = 1.0;
    int cells1 = 16;
    int cells2 = 16;
    CoefficientSpec coefficient;
    DataSpec initial;
    DataSpec velocity;
    ForcingSpec forcing;
    std::optional<double> horizon;

    // [scheme]
    SchemeKind kind = SchemeKind::atm;
    double sigma = 0.5;
    std::optional<double> tau;
    std::optional<double> tau_ratio;  // tau / tau0, tau0 = 2/||A||
    std::optional<int> steps;
    bool wavefront = false;
    StartupKind startup = StartupKind::atm;

    // [study]
    StudyKind study = StudyKind::none;
    std::vector<double> taus;
    std::optional<double> target_order;
    double order_band = 0.25;
    std::optional<SchemeKind> compare_kind;
    double ratio_target = 1.0;
    double ratio_band = 0.3;
    double epsilon = 0.1;
    double tolerance = 1e-10;
    double identity_tolerance = 1e-11;
    std::vector<double> ratios{0.5, 0.99, 1.01, 1.05};
    int probe_steps = 500;
    int growth_window = 200;
    double bracket_tolerance = 0.02;

    // [output]
    std::string csv_path;
    Verbosity verbosity = Verbosity::normal;
    bool energy = false;
};

/// Parses and validates an INI-style config. Throws ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);

/// Exit codes of the command line.
inline constexpr int kExitOk = 0;
inline constexpr int kExitViolation = 1;
inline constexpr int kExitUsage = 2;

/// Header comment opening every CSV file.
inline constexpr const char* kCsvHeader = "# atm-kit csv v1";

struct CommandOutput {
    std::ostream* csv = nullptr;  // may be null: no CSV
    std::ostream* summary = nullptr;
};

/// Single integration. CSV columns: n,t,norm,norm_a[,energy].
int cmd_run(const ExperimentConfig& config, const CommandOutput& out);

/// Time-order study. CSV columns: h,tau,error_a,error_l2,order[,ratio].
int cmd_convergence(const ExperimentConfig& config, const CommandOutput& out);

/// Energy certification (n,t,energy,bound,violation,relative_violation[,identity_defect])
/// or stability probe (ratio,tau,nonincreasing,growth,unstable).
int cmd_verify(const ExperimentConfig& config, const CommandOutput& out);

/// Builds the coefficient described by the config.
Coefficient make_coefficient(const ExperimentConfig& config);

/// Resolved time step; runs power iteration (seeded by config.seed) when
/// the config gives a ratio to tau0.
double resolve_tau(const ExperimentConfig& config, const Coefficient& k);

/// Power-iteration settings used for every ||A|| estimate a command makes:
/// the config seed and a raised iteration cap.
NormEstimateOptions norm_options(const ExperimentConfig& config);

}  // namespace atm
