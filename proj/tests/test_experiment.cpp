#include <doctest.h>

#include <cmath>
#include <sstream>

#include "atm/experiment.hpp"

using namespace atm;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in);
}

ConfigError parse_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e;
    }
    FAIL("expected a ConfigError");
    return ConfigError("", 0);
}

bool mentions(const ConfigError& e, const std::string& key) {
    for (const auto& k : e.keys()) {
        if (k == key) return true;
    }
    return false;
}

struct Captured {
    int code;
    std::string csv;
    std::string summary;
};

template <class Cmd>
Captured capture(Cmd cmd, const ExperimentConfig& c) {
    std::ostringstream csv, summary;
    const int code = cmd(c, CommandOutput{&csv, &summary});
    return {code, csv.str(), summary.str()};
}

const char* kMinimal = R"(
[scheme]
tau = 0.01
steps = 5
)";

}  // namespace

TEST_CASE("config defaults and full parse") {
    const ExperimentConfig d = parse(kMinimal);
    CHECK(d.equation == Equation::parabolic);
    CHECK(d.kind == SchemeKind::atm);
    CHECK(d.cells1 == 16);
    CHECK(d.steps == 5);
    CHECK(d.initial.kind == DataSpec::Kind::zero);

    const ExperimentConfig c = parse(R"(
# comment
seed = 42
[problem]
type = hyperbolic
l1 = 2.0
l2 = 1.5
cells1 = 8
cells2 = 12
coefficient = checkerboard(1, 3, 2)   ; inline comment
initial = mode(1, 2, 0.5)
velocity = expression(x1 * (2 - x1))
forcing = mode-cos(1, 2, 3, 4)
horizon = 1
[scheme]
kind = hyperbolic-atm
sigma = 0.3
tau = 0.01
wavefront = yes
[study]
type = energy
tolerance = 1e-9
[output]
csv = out.csv
verbosity = quiet
energy = true
)");
    CHECK(c.seed == 42);
    CHECK(c.equation == Equation::hyperbolic);
    CHECK(c.l1 == 2.0);
    CHECK(c.cells2 == 12);
    CHECK(c.coefficient.kind == CoefficientSpec::Kind::checkerboard);
    CHECK(c.coefficient.k_upper == 3.0);
    CHECK(c.coefficient.blocks == 2);
    CHECK(c.initial.kind == DataSpec::Kind::mode);
    CHECK(c.initial.m2 == 2);
    CHECK(c.initial.amplitude == 0.5);
    CHECK(c.velocity.kind == DataSpec::Kind::expression);
    CHECK(c.velocity.expression == "x1 * (2 - x1)");
    CHECK(c.forcing.kind == ForcingSpec::Kind::mode_cos);
    CHECK(c.forcing.rate == 4.0);
    CHECK(c.kind == SchemeKind::hyperbolic_atm);
    CHECK(c.wavefront);
    CHECK(c.study == StudyKind::energy);
    CHECK(c.tolerance == 1e-9);
    CHECK(c.csv_path == "out.csv");
    CHECK(c.verbosity == Verbosity::quiet);
    CHECK(c.energy);
}

TEST_CASE("config errors carry lines and keys") {
    SUBCASE("syntax error") {
        const ConfigError e = parse_error("[problem\ncells = 4\n");
        CHECK(e.line() == 1);
    }
    SUBCASE("unknown key") {
        const ConfigError e = parse_error("[scheme]\ntau = 0.1\nsteps = 2\nsigmaa = 1\n");
        CHECK(e.line() == 4);
        CHECK(mentions(e, "scheme.sigmaa"));
    }
    SUBCASE("unknown section") {
        CHECK(mentions(parse_error("[solver]\ntol = 1\n"), "solver.tol"));
    }
    SUBCASE("bad number") {
        const ConfigError e = parse_error("[scheme]\ntau = 0.1\nsteps = 2\nsigma = half\n");
        CHECK(e.line() == 4);
        CHECK(mentions(e, "scheme.sigma"));
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
    SUBCASE("bad field spec") {
        CHECK(mentions(parse_error("[problem]\ncoefficient = banana(1)\n[scheme]\ntau=1\nsteps=1\n"), "problem.coefficient"));
        CHECK(mentions(parse_error("[problem]\ninitial = mode(1)\n[scheme]\ntau=1\nsteps=1\n"), "problem.initial"));
        CHECK(mentions(parse_error("[problem]\nforcing = expression(x1 +)\n[scheme]\ntau=1\nsteps=1\n"), "problem.forcing"));
        CHECK(mentions(parse_error("[problem]\ncoefficient = checkerboard(2, 1)\n[scheme]\ntau=1\nsteps=1\n"), "problem.coefficient"));
    }
    SUBCASE("tau and tau_ratio") {
        const ConfigError both = parse_error("[scheme]\ntau = 0.1\ntau_ratio = 2\nsteps = 3\n");
        CHECK(both.line() == 0);
        CHECK(mentions(both, "scheme.tau"));
        CHECK(mentions(both, "scheme.tau_ratio"));
        CHECK(std::string(both.what()).find("line 2") != std::string::npos);
        CHECK(mentions(parse_error("[scheme]\nsteps = 3\n"), "scheme.tau"));
    }
    SUBCASE("horizon and steps") {
        CHECK(mentions(parse_error("[scheme]\ntau = 0.1\n"), "problem.horizon"));
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\n[scheme]\ntau = 0.1\nsteps = 10\n"), "scheme.steps"));
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\n[scheme]\ntau = 0.3\n"), "problem.horizon"));
        CHECK(mentions(parse_error("[scheme]\ntau = 0.3\nsteps = 0\n"), "scheme.steps"));
    }
    SUBCASE("problem type and scheme must agree") {
        const ConfigError e = parse_error("[problem]\ntype = hyperbolic\n[scheme]\nkind = atm\ntau = 1\nsteps = 1\n");
        CHECK(mentions(e, "problem.type"));
        CHECK(mentions(e, "scheme.kind"));
        CHECK(mentions(parse_error("[problem]\nvelocity = mode(1,1)\n[scheme]\ntau = 1\nsteps = 1\n"), "problem.velocity"));
    }
    SUBCASE("convergence study") {
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\n[study]\ntype = convergence\n"), "study.taus"));
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\ncoefficient = checkerboard(1,2)\n[study]\ntype = convergence\ntaus = 0.1\n"),
                       "problem.coefficient"));
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\ninitial = random(1)\n[study]\ntype = convergence\ntaus = 0.1\n"),
                       "problem.initial"));
        CHECK(mentions(parse_error("[problem]\nhorizon = 1\n[study]\ntype = convergence\ntaus = 0.3\n"), "study.taus"));
    }
    SUBCASE("stability needs the explicit scheme") {
        CHECK(mentions(parse_error("[study]\ntype = stability\n"), "scheme.kind"));
    }
    SUBCASE("all violations are listed together") {
        const ConfigError e = parse_error("[problem]\ntype = hyperbolic\n[scheme]\nkind = atm\n");
        CHECK(mentions(e, "scheme.tau"));
        CHECK(mentions(e, "problem.horizon"));
        CHECK(mentions(e, "problem.type"));
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_config("/nonexistent/atm.ini"), ConfigError);
    }
}

TEST_CASE("run command") {
    SUBCASE("zero data writes zero norms") {
        const Captured r = capture(cmd_run, parse(kMinimal));
        CHECK(r.code == kExitOk);
        std::istringstream lines(r.csv);
        std::string line;
        std::getline(lines, line);
        CHECK(line == "# atm-kit csv v1");
        int rows = 0;
        while (std::getline(lines, line)) {
            if (line.empty() || line[0] == '#' || line[0] == 'n') continue;
            ++rows;
            CHECK(line.substr(line.find(',', line.find(',') + 1)) == ",0,0");
        }
        CHECK(rows == 6);
        CHECK(r.summary.find("status=ok") != std::string::npos);
    }
    SUBCASE("explicit above the threshold blows up") {
        const Captured r = capture(cmd_run, parse(R"(
[problem]
cells = 16
initial = mode(15, 15)
[scheme]
kind = explicit
tau_ratio = 1.05
steps = 400
)"));
        CHECK(r.code == kExitViolation);
        CHECK(r.summary.find("blow-up level=") != std::string::npos);
    }
    SUBCASE("ATM at 100 tau0 decays") {
        const Captured r = capture(cmd_run, parse(R"(
seed = 9
[problem]
cells = 16
coefficient = checkerboard(1, 2)
initial = random(1)
[scheme]
kind = atm
sigma = 1
tau_ratio = 100
steps = 40
)"));
        CHECK(r.code == kExitOk);
        const auto a0 = r.summary.find("norm_a_initial=");
        const auto a1 = r.summary.find("norm_a_final=");
        const double initial = std::stod(r.summary.substr(a0 + 15));
        const double final_a = std::stod(r.summary.substr(a1 + 13));
        CHECK(final_a <= initial);
        CHECK(r.csv.find("# tau=") != std::string::npos);
    }
    SUBCASE("energy column for three-level schemes") {
        const Captured r = capture(cmd_run, parse(R"(
[problem]
initial = mode(1, 1)
[scheme]
kind = mlatm
tau = 0.01
steps = 3
[output]
energy = true
)"));
        CHECK(r.csv.find("n,t,norm,norm_a,energy\n") != std::string::npos);
        // Level 0 has no energy for the three-level functional.
        CHECK(r.csv.find("\n0,0,") != std::string::npos);
        CHECK(r.csv.find(",\n1,") != std::string::npos);
    }
    SUBCASE("floats carry 17 significant digits") {
        const Captured r = capture(cmd_run, parse("[problem]\ninitial = mode(1,1)\n[scheme]\ntau = 0.1\nsteps = 1\n"));
        CHECK(r.csv.find("\n1,0.10000000000000001,") != std::string::npos);
    }
}

TEST_CASE("convergence command") {
    const auto config = [](const std::string& scheme, const std::string& study, const std::string& forcing) {
        return parse("[problem]\ncells = 32\ninitial = mode(1, 1)\nhorizon = 0.1\nforcing = " + forcing +
                     "\n[scheme]\n" + scheme +
                     "\n[study]\ntype = convergence\ntaus = 0.005, 0.0025, 0.00125, 0.000625, 0.0003125\n" + study);
    };
    const std::string forced = "mode-exp(1, 1, 19.64, -0.1)";
    SUBCASE("MLATM third order") {
        const Captured r = capture(cmd_convergence, config("kind = mlatm\nsigma = 0.5", "", forced));
        CHECK(r.code == kExitOk);
        CHECK(r.csv.find("h,tau,error_a,error_l2,order\n") != std::string::npos);
    }
    SUBCASE("ATM sigma = 1 first order") {
        const std::string cfg = R"(
[problem]
cells = 16
initial = mode(1, 1)
horizon = 0.05
[scheme]
kind = atm
sigma = 1
[study]
type = convergence
taus = 0.0002, 0.0001, 0.00005, 0.000025, 0.0000125
)";
        const Captured r = capture(cmd_convergence, parse(cfg));
        CHECK(r.code == kExitOk);
        CHECK(r.summary.find("target=1") != std::string::npos);
    }
    SUBCASE("missed target band is a violation") {
        const Captured r = capture(cmd_convergence, config("kind = atm\nsigma = 0.5", "target_order = 5", forced));
        CHECK(r.code == kExitViolation);
    }
    SUBCASE("ratio column") {
        const Captured r = capture(cmd_convergence, config("kind = mlatm", "compare = atm", forced));
        CHECK(r.csv.find(",order,ratio\n") != std::string::npos);
        CHECK(r.code == kExitOk);
    }
    SUBCASE("zero data reports undefined orders") {
        const Captured r = capture(cmd_convergence, parse(R"(
[problem]
horizon = 0.1
[study]
type = convergence
taus = 0.01, 0.005
)"));
        CHECK(r.code == kExitOk);
        CHECK(r.summary.find("undefined") != std::string::npos);
        CHECK(r.csv.find(",nan\n") != std::string::npos);
    }
    SUBCASE("needs a convergence study") {
        CHECK_THROWS_AS(cmd_convergence(parse(kMinimal), {}), ConfigError);
    }
}

TEST_CASE("verify command") {
    SUBCASE("hyperbolic identity") {
        const Captured r = capture(cmd_verify, parse(R"(
[problem]
type = hyperbolic
cells = 16
initial = mode(1, 1)
[scheme]
sigma = 0.25
tau = 0.05
steps = 1000
[study]
type = energy
)"));
        CHECK(r.code == kExitOk);
        CHECK(r.csv.find(",identity_defect\n") != std::string::npos);
        CHECK(r.csv.find("# startup n=1") != std::string::npos);
    }
    SUBCASE("explicit below the threshold") {
        const Captured r = capture(cmd_verify, parse(R"(
[problem]
cells = 16
initial = random(1)
[scheme]
kind = explicit
tau_ratio = 0.99
steps = 200
[study]
type = energy
)"));
        CHECK(r.code == kExitOk);
        CHECK(r.summary.find("theorem1") != std::string::npos);
    }
    SUBCASE("explicit above the threshold violates the estimate") {
        const Captured r = capture(cmd_verify, parse(R"(
[problem]
cells = 16
initial = mode(15, 15)
[scheme]
kind = explicit
tau_ratio = 1.05
steps = 100
[study]
type = energy
)"));
        CHECK(r.code == kExitViolation);
    }
    SUBCASE("ATM below sigma = 1/2 warns") {
        const Captured r = capture(cmd_verify, parse(R"(
[problem]
cells = 16
initial = mode(15, 15)
[scheme]
kind = atm
sigma = 0.4
tau_ratio = 50
steps = 50
[study]
type = energy
)"));
        CHECK(r.summary.find("warning: sigma < 0.5") != std::string::npos);
        CHECK((r.code == kExitOk || r.code == kExitViolation));
    }
    SUBCASE("stability probe") {
        const Captured r = capture(cmd_verify, parse("[problem]\ncells = 16\n[scheme]\nkind = explicit\n[study]\ntype = stability\n"));
        CHECK(r.code == kExitOk);
        CHECK(r.csv.find("ratio,tau,nonincreasing,growth,unstable\n") != std::string::npos);
    }
    SUBCASE("needs a verification study") {
        CHECK_THROWS_AS(cmd_verify(parse(kMinimal), {}), ConfigError);
    }
}

TEST_CASE("seed controls random data and wavefront leaves output unchanged") {
    const std::string cfg = R"(
[problem]
cells = 12
coefficient = expression(1.5 + 0.5 * sin(5 * x1 * x2), 1, 2)
initial = random(1)
[scheme]
kind = mlatm
sigma = 1
tau_ratio = 10
steps = 30
[study]
type = energy
)";
    ExperimentConfig a = parse(cfg);
    ExperimentConfig b = a;
    b.wavefront = true;
    ExperimentConfig c = a;
    c.seed = 1;
    const Captured ra = capture(cmd_verify, a);
    CHECK(ra.code == kExitOk);
    CHECK(ra.csv == capture(cmd_verify, b).csv);
    CHECK(ra.csv == capture(cmd_verify, a).csv);
    CHECK(ra.csv != capture(cmd_verify, c).csv);
}

TEST_CASE("coefficient construction and tau resolution") {
    ExperimentConfig c = parse("[problem]\ncells = 8\ncoefficient = checkerboard(1, 4, 2)\n[scheme]\ntau = 1\nsteps = 1\n");
    const Coefficient k = make_coefficient(c);
    CHECK(k.face1(0, 1) == 1.0);
    CHECK(k.face1(7, 1) == 4.0);
    CHECK(k.face1(7, 7) == 1.0);
    CHECK(resolve_tau(c, k) == 1.0);
    c.tau.reset();
    c.tau_ratio = 0.5;
    CHECK(resolve_tau(c, k) == doctest::Approx(1.0 / estimate_norm_A(k)).epsilon(1e-8));
}
