#include "qrmi/verify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "qrmi/divergence.h"
#include "qrmi/io.h"
#include "qrmi/mutual_info.h"
#include "qrmi/parallel.h"
#include "qrmi/random.h"
#include "qrmi/universal_state.h"

namespace qrmi {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// JSON has no infinities; non-finite numbers are written as text.
nlohmann::json number(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return format_number(x);
}

struct Check {
    int property = 0;
    double violation = 0;
    nlohmann::json detail;
};

struct TrialOutcome {
    std::vector<Check> checks;
    nlohmann::json inputs;
};

struct SuiteDef {
    std::vector<std::pair<std::string, double>> properties;  // name, tolerance
    TrialOutcome (*trial)(const VerifyOptions &, int trial, Rng &rng);
};

// Violation of lhs <= rhs.
double excess(double lhs, double rhs) {
    if (std::isnan(lhs) || std::isnan(rhs)) {
        return kInf;
    }
    if (lhs == rhs) {
        return 0;
    }
    return std::max(0.0, lhs - rhs);
}

double mismatch(double a, double b) {
    if (std::isnan(a) || std::isnan(b)) {
        return kInf;
    }
    return a == b ? 0 : std::abs(a - b);
}

TrialOutcome pinching_trial(const VerifyOptions &o, int trial, Rng &rng) {
    const int dim = o.dim_a * o.dim_b;
    const DensityMatrix rho = random_state(dim, rng);
    // Odd trials use sigma with a degenerate spectrum so the pinching is not a full dephasing.
    const HermitianOperator sigma =
        trial % 2 == 0 ? random_state(dim, rng).op() : tensor(random_state(o.dim_a, rng).op(), HermitianOperator::identity(o.dim_b) * (1.0 / o.dim_b));
    const DensityMatrix pinched = DensityMatrix::trusted(pinch(sigma, rho.op()));
    const int count = spectrum_count(sigma);
    const double log_count = std::log(static_cast<double>(count));
    TrialOutcome out;
    out.inputs = {{"rho", to_json(rho.op())}, {"sigma", to_json(sigma)}};
    const double alphas[] = {0.1, 0.25, 0.5, 0.75, 0.9, 1.0, 1.5, 2.0, 2.5, 3.0, 4.0, kInf};
    for (double a : alphas) {
        const AlphaParam alpha = std::isinf(a) ? AlphaParam::infinity() : AlphaParam(a);
        const double lo = divergence(DivergenceKind::kSandwiched, pinched, sigma, alpha).value;
        const double mid = divergence(DivergenceKind::kSandwiched, rho, sigma, alpha).value;
        const double c = a <= 2 ? 1 : 2;
        out.checks.push_back({0, excess(lo, mid), {{"alpha", number(a)}, {"pinched", number(lo)}, {"original", number(mid)}}});
        out.checks.push_back({1, excess(mid, lo + c * log_count), {{"alpha", number(a)}, {"pinched", number(lo)}, {"original", number(mid)}, {"spectrum_count", count}}});
    }
    const double gap = min_eigenvalue(static_cast<double>(count) * pinch(sigma, rho.op()) - rho.op());
    out.checks.push_back({2, std::max(0.0, -gap), {{"min_eigenvalue", number(gap)}}});
    return out;
}

TrialOutcome audenaert_trial(const VerifyOptions &o, int, Rng &rng) {
    const int dim = o.dim_a * o.dim_b;
    const HermitianOperator l = random_psd(dim, rng);
    const HermitianOperator k = random_psd(dim, rng);
    const HermitianOperator above = threshold_projector(l, k);
    const HermitianOperator below = HermitianOperator::identity(dim) - above;
    const double rhs = (k.matrix() * above.matrix()).trace().real() + (l.matrix() * below.matrix()).trace().real();
    TrialOutcome out;
    out.inputs = {{"L", to_json(l)}, {"K", to_json(k)}};
    for (double s : {0.2, 0.5, 0.8}) {
        const double lhs = (mat_power(l, s).matrix() * mat_power(k, 1 - s).matrix()).trace().real();
        out.checks.push_back({0, excess(rhs, lhs), {{"s", s}, {"lhs", number(lhs)}, {"rhs", number(rhs)}}});
    }
    return out;
}

HypothesisInstance random_instance(const VerifyOptions &o, bool general_tau, Rng &rng) {
    BipartiteState rho = random_bipartite(o.dim_a, o.dim_b, rng);
    if (general_tau) {
        return HypothesisInstance(std::move(rho), random_state(o.dim_a, rng).op());
    }
    return HypothesisInstance::mutual_information(rho);
}

nlohmann::json instance_json(const HypothesisInstance &inst) {
    return {{"rho", to_json(inst.rho().state().op())}, {"dims", {inst.dim_a(), inst.dim_b()}}, {"tau", to_json(inst.tau())}};
}

double converged_value(const MIResult &r) {
    return r.converged ? r.value : std::numeric_limits<double>::quiet_NaN();
}

TrialOutcome duality_trial(const VerifyOptions &o, int trial, Rng &rng) {
    const HypothesisInstance inst = random_instance(o, trial % 2 == 1, rng);
    TrialOutcome out;
    out.inputs = instance_json(inst);
    for (double a : {0.6, 0.8, 1.5, 2.0, 3.0}) {
        const double fp = converged_value(sandwiched_mi(inst, a));
        const double dual = converged_value(dual_mi(inst, a));
        const double direct = converged_value(direct_minimization(inst, DivergenceKind::kSandwiched, a));
        const nlohmann::json detail = {{"alpha", a}, {"sandwiched", number(fp)}, {"dual", number(dual)}, {"direct", number(direct)}};
        out.checks.push_back({0, mismatch(fp, dual), detail});
        out.checks.push_back({1, mismatch(fp, direct), detail});
        out.checks.push_back({2, mismatch(dual, direct), detail});
    }
    return out;
}

// x (x) y with the factors regrouped as (A_x A_y)(B_x B_y).
HypothesisInstance tensor_instance(const HypothesisInstance &x, const HypothesisInstance &y) {
    const HermitianOperator joint = tensor(x.rho().state().op(), y.rho().state().op());
    const int dims[] = {x.dim_a(), x.dim_b(), y.dim_a(), y.dim_b()};
    const int perm[] = {0, 2, 1, 3};
    const HermitianOperator reordered = permute_subsystems(joint, dims, perm);
    return HypothesisInstance(BipartiteState(DensityMatrix::trusted(reordered), x.dim_a() * y.dim_a(), x.dim_b() * y.dim_b()),
                              tensor(x.tau(), y.tau()));
}

TrialOutcome additivity_trial(const VerifyOptions &o, int, Rng &rng) {
    const HypothesisInstance x = random_instance(o, true, rng);
    const HypothesisInstance y = random_instance(o, true, rng);
    const HypothesisInstance xy = tensor_instance(x, y);
    TrialOutcome out;
    out.inputs = {{"x", instance_json(x)}, {"y", instance_json(y)}};
    for (double a : {0.5, 0.75, 1.5, 3.0}) {
        const double petz_sum = converged_value(petz_mi(x, a)) + converged_value(petz_mi(y, a));
        const double petz_joint = converged_value(petz_mi(xy, a));
        out.checks.push_back({0, mismatch(petz_joint, petz_sum), {{"alpha", a}, {"joint", number(petz_joint)}, {"sum", number(petz_sum)}}});
        const double sw_sum = converged_value(sandwiched_mi(x, a)) + converged_value(sandwiched_mi(y, a));
        const double sw_joint = converged_value(sandwiched_mi(xy, a));
        out.checks.push_back({1, mismatch(sw_joint, sw_sum), {{"alpha", a}, {"joint", number(sw_joint)}, {"sum", number(sw_sum)}}});
    }
    return out;
}

TrialOutcome universal_trial(const VerifyOptions &o, int, Rng &rng) {
    const UniversalState &u = cached_universal_state(o.n, o.d);
    int dim = 1;
    for (int k = 0; k < o.n; k++) {
        dim *= o.d;
    }
    const DensityMatrix tau(symmetrize(random_state(dim, rng).op(), o.d, o.n));
    const double gap = domination_gap(tau, u);
    const double commutator = commutator_norm(u.omega.matrix(), tau.matrix());
    TrialOutcome out;
    out.inputs = {{"tau", to_json(tau.op())}, {"n", o.n}, {"d", o.d}};
    out.checks.push_back({0, std::max(0.0, -gap), {{"min_eigenvalue", number(gap)}, {"g", u.g}}});
    out.checks.push_back({1, commutator, {{"commutator_norm", number(commutator)}}});
    return out;
}

TrialOutcome derivative_trial(const VerifyOptions &o, int, Rng &rng) {
    const int dim = o.dim_a * o.dim_b;
    const double h = 1e-3;
    const DensityMatrix rho = random_state(dim, rng);
    const HermitianOperator sigma = random_state(dim, rng).op();
    const double v = rel_entropy_and_variance(rho, sigma).v;
    const HypothesisInstance inst = random_instance(o, false, rng);
    TrialOutcome out;
    out.inputs = {{"rho", to_json(rho.op())}, {"sigma", to_json(sigma)}, {"instance", instance_json(inst)}};
    int property = 0;
    for (DivergenceKind kind : {DivergenceKind::kPetz, DivergenceKind::kSandwiched}) {
        const double slope = (divergence(kind, rho, sigma, 1 + h).value - divergence(kind, rho, sigma, 1 - h).value) / (2 * h);
        out.checks.push_back({property++, mismatch(slope, v / 2), {{"slope", number(slope)}, {"half_variance", number(v / 2)}}});
    }
    const double slope = (converged_value(sandwiched_mi(inst, 1 + h)) - converged_value(sandwiched_mi(inst, 1 - h))) / (2 * h);
    const double half_v = mi_variance(inst).v / 2;
    out.checks.push_back({property, mismatch(slope, half_v), {{"slope", number(slope)}, {"half_variance", number(half_v)}}});
    return out;
}

const SuiteDef &suite_def(const std::string &name) {
    static const std::vector<std::pair<std::string, SuiteDef>> defs = {
        {"pinching", {{{"sandwich_lower", 1e-8}, {"sandwich_upper", 1e-8}, {"operator_pinching", 1e-9}}, pinching_trial}},
        {"duality", {{{"fixed_point_vs_dual", 1e-7}, {"fixed_point_vs_direct", 1e-6}, {"dual_vs_direct", 1e-6}}, duality_trial}},
        {"additivity", {{{"petz_additivity", 1e-8}, {"sandwiched_additivity", 1e-8}}, additivity_trial}},
        {"universal", {{{"domination", 1e-9}, {"commutation", 1e-9}}, universal_trial}},
        {"audenaert", {{{"audenaert", 1e-9}}, audenaert_trial}},
        {"derivative", {{{"petz_divergence_slope", 1e-4}, {"sandwiched_divergence_slope", 1e-4}, {"sandwiched_mi_slope", 1e-4}}, derivative_trial}},
    };
    for (const auto &[n, def] : defs) {
        if (n == name) {
            return def;
        }
    }
    throw std::invalid_argument("unknown verify suite '" + name + "'");
}

}  // namespace

bool SuiteReport::passed() const {
    return std::all_of(properties.begin(), properties.end(), [](const PropertyReport &p) { return p.passed == p.checks; });
}

const std::vector<std::string> &suite_names() {
    static const std::vector<std::string> names = {"pinching", "duality", "additivity", "universal", "audenaert", "derivative"};
    return names;
}

SuiteReport run_suite(const std::string &suite, const VerifyOptions &options) {
    const SuiteDef &def = suite_def(suite);
    if (options.trials < 1) {
        throw std::invalid_argument("verify: trials must be positive");
    }
    if (options.dim_a < 1 || options.dim_b < 1 || options.dim_a * options.dim_b > 64) {
        throw std::invalid_argument("verify: dims must be positive with dA dB <= 64");
    }
    const int suite_index = static_cast<int>(std::find(suite_names().begin(), suite_names().end(), suite) - suite_names().begin());
    std::vector<TrialOutcome> outcomes(options.trials);
    parallel_for(options.trials, options.workers, [&](int t) {
        std::seed_seq seq{static_cast<uint32_t>(options.seed), static_cast<uint32_t>(options.seed >> 32), static_cast<uint32_t>(suite_index),
                          static_cast<uint32_t>(t)};
        Rng rng(seq);
        outcomes[t] = def.trial(options, t, rng);
    });

    SuiteReport report;
    report.suite = suite;
    report.seed = options.seed;
    report.trials = options.trials;
    for (const auto &[name, tol] : def.properties) {
        report.properties.push_back({name, tol, 0, 0, 0});
    }
    for (int t = 0; t < options.trials; t++) {
        for (const Check &c : outcomes[t].checks) {
            PropertyReport &p = report.properties[c.property];
            p.checks++;
            p.max_violation = std::max(p.max_violation, std::isnan(c.violation) ? kInf : c.violation);
            if (c.violation <= p.tolerance) {
                p.passed++;
            } else if (!report.counterexample) {
                report.counterexample = nlohmann::json{{"suite", suite},         {"property", p.name},    {"trial", t},
                                                       {"seed", options.seed},   {"violation", number(c.violation)}, {"tolerance", p.tolerance},
                                                       {"values", c.detail},     {"inputs", outcomes[t].inputs}};
            }
        }
    }
    return report;
}

nlohmann::json to_json(const SuiteReport &report) {
    nlohmann::json props = nlohmann::json::array();
    for (const PropertyReport &p : report.properties) {
        props.push_back({{"name", p.name}, {"tolerance", p.tolerance}, {"checks", p.checks}, {"passed", p.passed}, {"max_violation", number(p.max_violation)}});
    }
    return {{"suite", report.suite}, {"seed", report.seed}, {"trials", report.trials}, {"passed", report.passed()}, {"properties", props}};
}

}  // namespace qrmi
