#include "cli.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "qrmi/builtins.h"
#include "qrmi/divergence.h"
#include "qrmi/exponents.h"
#include "qrmi/hypothesis_lab.h"
#include "qrmi/io.h"
#include "qrmi/mutual_info.h"
#include "qrmi/parallel.h"
#include "qrmi/verify.h"

namespace qrmi::cli {

namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();
// Slack allowed when an experiment row compares an achieved error with its guarantee.
constexpr double kBoundSlack = 1e-9;

// Thrown for bad user input; maps to kValidation.
class UsageError : public std::invalid_argument {
   public:
    using std::invalid_argument::invalid_argument;
};

struct Common {
    std::string output;
    std::string format;
    std::string units = "nats";

    // A quantity measured in nats^power, in the requested units: bits are nats / ln 2.
    double convert(double nats, int power = 1) const {
        if (units != "bits") {
            return nats;
        }
        for (int k = 0; k < power; k++) {
            nats /= std::log(2.0);
        }
        return nats;
    }
};

json number(double x) {
    if (std::isfinite(x)) {
        return x;
    }
    return format_number(x);
}

double parse_number(const std::string &text) {
    if (text == "inf" || text == "+inf") {
        return kInf;
    }
    if (text == "-inf") {
        return -kInf;
    }
    size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception &) {
        used = 0;
    }
    if (used == 0 || used != text.size() || std::isnan(v)) {
        throw UsageError("not a number: '" + text + "'");
    }
    return v;
}

std::vector<std::string> split(const std::string &text, char sep) {
    std::vector<std::string> parts;
    std::string cur;
    std::istringstream in(text);
    while (std::getline(in, cur, sep)) {
        parts.push_back(cur);
    }
    if (!text.empty() && text.back() == sep) {
        parts.emplace_back();
    }
    return parts;
}

// Builtin name or operator JSON file.
HermitianOperator load_operator(const std::string &source) {
    if (std::filesystem::exists(source)) {
        return read_operator_file(source);
    }
    try {
        return builtin_state(source).state().op();
    } catch (const std::invalid_argument &) {
        throw UsageError("'" + source + "' is neither a readable file nor a builtin state");
    }
}

BipartiteState load_state(const std::string &source, const std::vector<int> &dims) {
    if (!std::filesystem::exists(source)) {
        try {
            return builtin_state(source);
        } catch (const std::invalid_argument &e) {
            throw UsageError(e.what());
        }
    }
    const HermitianOperator op = read_operator_file(source);
    int da = 0;
    int db = 0;
    if (dims.size() == 2) {
        da = dims[0];
        db = dims[1];
    } else {
        const int root = static_cast<int>(std::lround(std::sqrt(static_cast<double>(op.dim()))));
        if (root * root != op.dim()) {
            throw UsageError("--dims is required for a state of dimension " + std::to_string(op.dim()));
        }
        da = db = root;
    }
    if (da * db != op.dim()) {
        throw UsageError("--dims do not match the state dimension " + std::to_string(op.dim()));
    }
    return BipartiteState(DensityMatrix(op), da, db);
}

HypothesisInstance load_instance(const std::string &state, const std::vector<int> &dims, const std::string &tau) {
    if (state.empty()) {
        throw UsageError("an instance needs --state");
    }
    const BipartiteState rho = load_state(state, dims);
    if (tau == "marginal") {
        return HypothesisInstance::mutual_information(rho);
    }
    if (tau == "identity") {
        return HypothesisInstance::conditional(rho);
    }
    if (!std::filesystem::exists(tau)) {
        throw UsageError("--tau must be 'marginal', 'identity' or an operator file");
    }
    return HypothesisInstance(rho, read_operator_file(tau));
}

AlphaParam alpha_param(double a) {
    return std::isinf(a) ? AlphaParam::infinity() : AlphaParam(a);
}

DivergenceKind parse_kind(const std::string &kind) {
    if (kind == "petz") {
        return DivergenceKind::kPetz;
    }
    if (kind == "sandwiched") {
        return DivergenceKind::kSandwiched;
    }
    throw UsageError("--kind must be 'petz' or 'sandwiched'");
}

void emit(const Common &c, const std::string &text, std::ostream &out) {
    if (c.output.empty() || c.output == "-") {
        out << text;
        return;
    }
    std::ofstream file(c.output, std::ios::binary);
    if (!file) {
        throw UsageError("cannot write '" + c.output + "'");
    }
    file << text;
}

std::string csv_row(const std::vector<std::string> &cells) {
    std::string row;
    for (size_t i = 0; i < cells.size(); i++) {
        row += (i ? "," : "") + cells[i];
    }
    return row + "\n";
}

// Rows as CSV (header + cells) or as a JSON array of objects keyed by the header.
std::string table(const Common &c, const std::vector<std::string> &header, const std::vector<std::vector<json>> &rows) {
    if (c.format == "json") {
        json arr = json::array();
        for (const auto &row : rows) {
            json obj = json::object();
            for (size_t i = 0; i < header.size(); i++) {
                obj[header[i]] = row[i];
            }
            arr.push_back(obj);
        }
        return arr.dump(2) + "\n";
    }
    std::string text = csv_row(header);
    for (const auto &row : rows) {
        std::vector<std::string> cells;
        for (const json &v : row) {
            if (v.is_number_float()) {
                cells.push_back(format_number(v.get<double>()));
            } else if (v.is_number_integer()) {
                cells.push_back(std::to_string(v.get<long long>()));
            } else if (v.is_boolean()) {
                cells.push_back(v.get<bool>() ? "true" : "false");
            } else {
                cells.push_back(v.get<std::string>());
            }
        }
        text += csv_row(cells);
    }
    return text;
}

struct ComputeArgs {
    std::string quantity;
    std::string kind = "sandwiched";
    std::string alpha = "1";
    std::string state;
    std::vector<int> dims;
    std::string tau = "marginal";
    std::string rho;
    std::string sigma;
};

int cmd_compute(const ComputeArgs &a, const Common &c, std::ostream &out) {
    std::vector<json> reports;
    bool converged = true;
    if (a.quantity == "divergence") {
        if (a.rho.empty() || a.sigma.empty()) {
            throw UsageError("compute divergence needs --rho and --sigma");
        }
        const DensityMatrix rho(load_operator(a.rho));
        const HermitianOperator sigma = load_operator(a.sigma);
        for (double alpha : parse_grid(a.alpha)) {
            const DivergenceValue d = divergence(parse_kind(a.kind), rho, sigma, alpha_param(alpha));
            reports.push_back({{"quantity", "divergence"}, {"kind", a.kind}, {"alpha", number(alpha)}, {"value", number(c.convert(d.value))},
                               {"support_violation", d.support_violation}, {"method", "spectral"}, {"converged", true}, {"units", c.units}});
        }
    } else if (a.quantity == "mi" || a.quantity == "conditional") {
        const HypothesisInstance inst = load_instance(a.state, a.dims, a.quantity == "conditional" ? "identity" : a.tau);
        const DivergenceKind kind = parse_kind(a.kind);
        for (double alpha : parse_grid(a.alpha)) {
            const MIResult r = kind == DivergenceKind::kPetz ? petz_mi(inst, alpha_param(alpha)) : sandwiched_mi(inst, alpha_param(alpha));
            const double value = a.quantity == "conditional" ? -r.value : r.value;
            json rep = {{"quantity", a.quantity}, {"kind", a.kind}, {"alpha", number(alpha)}, {"value", number(c.convert(value))},
                        {"method", to_string(r.method)}, {"converged", r.converged}, {"iterations", r.iterations}, {"units", c.units}};
            if (r.minimizer.dim() > 0) {
                rep["minimizer"] = to_json(r.minimizer.op());
            }
            converged = converged && r.converged;
            reports.push_back(rep);
        }
    } else if (a.quantity == "variance") {
        const HypothesisInstance inst = load_instance(a.state, a.dims, a.tau);
        const RelativeEntropyVariance dv = mi_variance(inst);
        reports.push_back({{"quantity", "variance"}, {"information", number(c.convert(dv.d))}, {"value", number(c.convert(dv.v, 2))},
                           {"support_violation", dv.support_violation}, {"method", "spectral"}, {"converged", true}, {"units", c.units}});
    } else {
        throw UsageError("compute quantity must be one of mi, conditional, divergence, variance");
    }

    std::string text;
    if (c.format == "csv") {
        std::vector<std::vector<json>> rows;
        for (const json &r : reports) {
            rows.push_back({r["quantity"], r.value("kind", std::string()), r.contains("alpha") ? r["alpha"] : json(""), r["value"], r["method"], r["converged"]});
        }
        text = table(c, {"quantity", "kind", "alpha", "value", "method", "converged"}, rows);
    } else {
        text = (reports.size() == 1 ? reports.front() : json(reports)).dump(2) + "\n";
    }
    emit(c, text, out);
    return converged ? kOk : kNonConvergence;
}

struct ExponentArgs {
    std::string mode;
    std::string state;
    std::vector<int> dims;
    std::string tau = "marginal";
    std::string rates;
    std::string r;
};

int cmd_exponents(const ExponentArgs &a, const Common &c, std::ostream &out) {
    const HypothesisInstance inst = load_instance(a.state, a.dims, a.tau);
    if (a.mode == "second-order") {
        if (a.r.empty()) {
            throw UsageError("second-order mode needs --r");
        }
        const RelativeEntropyVariance dv = mi_variance(inst);
        if (dv.support_violation) {
            throw ExponentError("information variance is undefined for this instance");
        }
        std::vector<std::vector<json>> rows;
        for (double r : parse_grid(a.r)) {
            rows.push_back({number(c.convert(r)), number(gaussian_limit(r, dv.v).value)});
        }
        emit(c, table(c, {"r", "phi"}, rows), out);
        return kOk;
    }
    if (a.mode != "hoeffding" && a.mode != "strong-converse") {
        throw UsageError("--mode must be hoeffding, strong-converse or second-order");
    }
    if (a.rates.empty()) {
        throw UsageError("--R is required");
    }
    const std::vector<double> rates = parse_grid(a.rates);
    for (double r : rates) {
        if (!(r > 0)) {
            throw UsageError("rates must be positive");
        }
    }
    std::optional<ExponentSolver> solver;
    std::string failure;
    try {
        solver.emplace(inst);
    } catch (const ExponentError &e) {
        failure = e.what();
    }
    std::vector<std::optional<ExponentRecord>> records(rates.size());
    if (solver) {
        parallel_for(static_cast<int>(rates.size()), worker_count(), [&](int i) {
            try {
                records[i] = a.mode == "hoeffding" ? solver->hoeffding(rates[i]) : solver->strong_converse(rates[i]);
            } catch (const ExponentError &) {
                records[i].reset();
            }
        });
    }
    std::vector<std::vector<json>> rows;
    bool complete = true;
    for (size_t i = 0; i < rates.size(); i++) {
        if (!records[i]) {
            complete = false;
            rows.push_back({number(c.convert(rates[i])), "nan", "nan", "NonConverged"});
            continue;
        }
        const ExponentRecord &rec = *records[i];
        rows.push_back({number(c.convert(rec.rate)), number(c.convert(rec.value)), number(rec.s_star), to_string(rec.regime)});
    }
    emit(c, table(c, {"R", "value", "s_star", "regime"}, rows), out);
    if (!failure.empty()) {
        throw ExponentError(failure);
    }
    return complete ? kOk : kNonConvergence;
}

struct ExperimentArgs {
    std::string mode;
    std::string state;
    std::vector<int> dims;
    std::string tau = "marginal";
    std::string n = "1";
    double s = 0.5;
    double rate = 0;
    std::string mu;
};

int cmd_experiment(const ExperimentArgs &a, const Common &c, std::ostream &out) {
    const HypothesisInstance inst = load_instance(a.state, a.dims, a.tau);
    const std::vector<int> ns = parse_int_grid(a.n);
    for (int n : ns) {
        if (n < 1) {
            throw UsageError("--n values must be positive");
        }
    }
    struct Row {
        int n = 0;
        double r_or_mu = 0;
        double alpha1 = 0;
        double beta = 0;
        double bound = 0;
        bool satisfied = true;
    };
    std::vector<std::pair<int, double>> points;
    if (a.mode == "hoeffding" || a.mode == "strong-converse") {
        if (!(a.rate > 0)) {
            throw UsageError("--R must be positive");
        }
        if (a.mode == "hoeffding" ? !(a.s > 0 && a.s < 1) : !(a.s > 1)) {
            throw UsageError(a.mode == "hoeffding" ? "hoeffding experiments need 0 < s < 1" : "strong-converse experiments need s > 1");
        }
        for (int n : ns) {
            points.push_back({n, a.rate});
        }
    } else if (a.mode == "np") {
        if (a.mu.empty()) {
            throw UsageError("np experiments need --mu");
        }
        if (std::abs(inst.tau().matrix().trace().real() - 1) > kStateTolerance) {
            throw UsageError("np experiments need a normalized tau");
        }
        for (int n : ns) {
            for (double mu : parse_grid(a.mu)) {
                points.push_back({n, mu});
            }
        }
    } else {
        throw UsageError("--mode must be hoeffding, strong-converse or np");
    }

    std::vector<Row> rows(points.size());
    parallel_for(static_cast<int>(points.size()), worker_count(), [&](int i) {
        const auto [n, x] = points[i];
        Row &row = rows[i];
        row.n = n;
        row.r_or_mu = x;
        if (a.mode == "hoeffding") {
            const HoeffdingTest h = hoeffding_test(inst, n, a.s, x);
            row.alpha1 = type1_error(h.test, inst.rho());
            row.beta = type2_error_worst(h.test, inst.tau());
            row.bound = h.alpha_bound;
            row.satisfied = row.alpha1 <= h.alpha_bound + kBoundSlack && row.beta <= h.beta_bound + kBoundSlack;
        } else if (a.mode == "strong-converse") {
            const PinchedDecomposition dec(inst, n);
            const double mu = strong_converse_mu(dec.pair(), dec.g(), a.s, x);
            const PinchedOutcome o = dec.evaluate(mu);
            row.alpha1 = o.alpha1;
            row.beta = o.beta;
            row.bound = std::exp(-n * x);
            row.satisfied = row.beta <= row.bound + kBoundSlack;
        } else {
            const DensityMatrix rho_n = DensityMatrix::trusted(nfold_state(inst.rho(), n));
            const DensityMatrix sigma_n =
                DensityMatrix::trusted(nfold_reference(inst.tau(), tensor_power(inst.rho().marginal_b().op(), n), n));
            const TradeoffRecord t = simple_np_tradeoff(rho_n, sigma_n, x);
            row.alpha1 = t.alpha1;
            row.beta = t.beta;
            row.bound = std::exp(x);
            row.satisfied = row.beta <= row.bound * (1 + kBoundSlack) + 1e-15;
        }
    });
    std::vector<std::vector<json>> out_rows;
    bool all = true;
    for (const Row &r : rows) {
        // Rates carry units; thresholds mu are log-probabilities and convert the same way.
        out_rows.push_back({r.n, number(c.convert(r.r_or_mu)), number(r.alpha1), number(r.beta), number(r.bound), r.satisfied});
        all = all && r.satisfied;
    }
    emit(c, table(c, {"n", "R_or_mu", "alpha1", "beta", "bound", "satisfied"}, out_rows), out);
    return all ? kOk : kInvariantViolation;
}

struct VerifyArgs {
    std::string suite = "all";
    int trials = 10;
    uint64_t seed = 42;
    std::vector<int> dims = {2, 2};
    int n = 3;
    int d = 2;
    std::string counterexample = "counterexample.json";
};

int cmd_verify(const VerifyArgs &a, const Common &c, std::ostream &out, std::ostream &err) {
    VerifyOptions o;
    o.trials = a.trials;
    o.seed = a.seed;
    o.dim_a = a.dims.at(0);
    o.dim_b = a.dims.at(1);
    o.n = a.n;
    o.d = a.d;
    o.workers = worker_count();
    std::vector<std::string> suites;
    if (a.suite == "all") {
        suites = suite_names();
    } else {
        suites.push_back(a.suite);
    }
    std::vector<SuiteReport> reports;
    for (const std::string &s : suites) {
        reports.push_back(run_suite(s, o));
    }
    bool passed = true;
    std::optional<json> counterexample;
    for (const SuiteReport &r : reports) {
        passed = passed && r.passed();
        if (!counterexample && r.counterexample) {
            counterexample = r.counterexample;
        }
    }
    if (c.format == "csv") {
        std::vector<std::vector<json>> rows;
        for (const SuiteReport &r : reports) {
            for (const PropertyReport &p : r.properties) {
                rows.push_back({r.suite, p.name, p.checks, p.passed, number(p.max_violation), number(p.tolerance)});
            }
        }
        emit(c, table(c, {"suite", "property", "checks", "passed", "max_violation", "tolerance"}, rows), out);
    } else {
        json doc = {{"seed", a.seed}, {"trials", a.trials}, {"passed", passed}, {"suites", json::array()}};
        for (const SuiteReport &r : reports) {
            doc["suites"].push_back(to_json(r));
        }
        emit(c, doc.dump(2) + "\n", out);
    }
    if (!passed) {
        std::ofstream file(a.counterexample, std::ios::binary);
        file << counterexample.value_or(json::object()).dump(2) << "\n";
        err << "verify: invariant violated; counterexample written to " << a.counterexample << "\n";
        return kInvariantViolation;
    }
    return kOk;
}

void add_instance_options(CLI::App *cmd, std::string &state, std::vector<int> &dims, std::string &tau) {
    cmd->add_option("--state", state, "builtin (bell, correlated-bits, product, werner:p) or operator JSON file");
    cmd->add_option("--dims", dims, "factor dimensions dA dB of a state file")->expected(2);
    cmd->add_option("--tau", tau, "marginal, identity, or operator JSON file")->capture_default_str();
}

}  // namespace

std::vector<double> parse_grid(const std::string &text) {
    if (text.empty()) {
        throw UsageError("empty grid");
    }
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        const std::vector<std::string> parts = split(text, ':');
        if (parts.size() != 3) {
            throw UsageError("range grids are start:stop:step, got '" + text + "'");
        }
        const double start = parse_number(parts[0]);
        const double stop = parse_number(parts[1]);
        const double step = parse_number(parts[2]);
        if (!std::isfinite(start) || !std::isfinite(stop) || !(step > 0) || !std::isfinite(step) || stop < start) {
            throw UsageError("range grid needs finite start <= stop and step > 0, got '" + text + "'");
        }
        const double span = (stop - start) / step;
        if (span > 1e6) {
            throw UsageError("range grid '" + text + "' has too many points");
        }
        const int count = static_cast<int>(std::floor(span + 1e-9)) + 1;
        for (int i = 0; i < count; i++) {
            out.push_back(start + i * step);
        }
        return out;
    }
    for (const std::string &p : split(text, ',')) {
        out.push_back(parse_number(p));
    }
    return out;
}

std::vector<int> parse_int_grid(const std::string &text) {
    std::vector<int> out;
    for (double v : parse_grid(text)) {
        if (v != std::round(v) || std::abs(v) > 1e6) {
            throw UsageError("expected integers, got '" + text + "'");
        }
        out.push_back(static_cast<int>(v));
    }
    return out;
}

int run_cli(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
    CLI::App app{"Renyi mutual information and composite hypothesis testing toolkit", "qrmi"};
    app.require_subcommand(1);
    Common common;
    auto add_common = [&](CLI::App *cmd, const std::string &default_format) {
        common.format = default_format;
        cmd->add_option("-o,--output", common.output, "output path (default stdout)");
        cmd->add_option("--format", common.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
        cmd->add_option("--units", common.units, "nats or bits")->check(CLI::IsMember({"nats", "bits"}))->capture_default_str();
    };

    ComputeArgs compute;
    CLI::App *c_compute = app.add_subcommand("compute", "a single information quantity");
    c_compute->add_option("quantity", compute.quantity, "mi, conditional, divergence or variance")->required();
    c_compute->add_option("--kind", compute.kind, "petz or sandwiched")->capture_default_str();
    c_compute->add_option("--alpha", compute.alpha, "order or grid (a:b:step, comma list, inf)")->capture_default_str();
    add_instance_options(c_compute, compute.state, compute.dims, compute.tau);
    c_compute->add_option("--rho", compute.rho, "first divergence argument (file or builtin)");
    c_compute->add_option("--sigma", compute.sigma, "second divergence argument (file or builtin)");

    ExponentArgs expo;
    CLI::App *c_expo = app.add_subcommand("exponents", "exponent curves");
    c_expo->add_option("--mode", expo.mode, "hoeffding, strong-converse or second-order")->required();
    add_instance_options(c_expo, expo.state, expo.dims, expo.tau);
    c_expo->add_option("--R", expo.rates, "rate grid in nats");
    c_expo->add_option("--r", expo.r, "second-order deviation grid in nats");

    ExperimentArgs exper;
    CLI::App *c_exper = app.add_subcommand("experiment", "finite-n tests against their guarantees");
    c_exper->add_option("--mode", exper.mode, "hoeffding, strong-converse or np")->required();
    add_instance_options(c_exper, exper.state, exper.dims, exper.tau);
    c_exper->add_option("--n", exper.n, "copy-number grid")->capture_default_str();
    c_exper->add_option("--s", exper.s, "order s of the test")->capture_default_str();
    c_exper->add_option("--R", exper.rate, "rate in nats");
    c_exper->add_option("--mu", exper.mu, "log type-II budget grid (np mode)");

    VerifyArgs ver;
    CLI::App *c_verify = app.add_subcommand("verify", "invariant suites");
    std::vector<std::string> suites = suite_names();
    suites.push_back("all");
    c_verify->add_option("--suite", ver.suite, "suite name or all")->check(CLI::IsMember(suites))->capture_default_str();
    c_verify->add_option("--trials", ver.trials, "trials per suite")->check(CLI::PositiveNumber)->capture_default_str();
    c_verify->add_option("--seed", ver.seed, "64-bit seed")->capture_default_str();
    c_verify->add_option("--dims", ver.dims, "factor dimensions of random instances")->expected(2);
    c_verify->add_option("--n", ver.n, "copies for the universal suite")->capture_default_str();
    c_verify->add_option("--d", ver.d, "local dimension for the universal suite")->capture_default_str();
    c_verify->add_option("--counterexample", ver.counterexample, "where to write the first failing case")->capture_default_str();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    // Common options are registered on the chosen subcommand so each gets its own default format.
    for (const std::string &a : args) {
        if (a == "compute" || a == "verify") {
            add_common(a == "compute" ? c_compute : c_verify, "json");
            break;
        }
        if (a == "exponents" || a == "experiment") {
            add_common(a == "exponents" ? c_expo : c_exper, "csv");
            break;
        }
    }
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp &) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp &) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError &e) {
        err << "qrmi: " << e.what() << "\n";
        return kValidation;
    }

    try {
        if (c_compute->parsed()) {
            return cmd_compute(compute, common, out);
        }
        if (c_expo->parsed()) {
            return cmd_exponents(expo, common, out);
        }
        if (c_exper->parsed()) {
            return cmd_experiment(exper, common, out);
        }
        return cmd_verify(ver, common, out, err);
    } catch (const ExponentError &e) {
        err << "qrmi: " << e.what() << "\n";
        return kNonConvergence;
    } catch (const std::invalid_argument &e) {
        err << "qrmi: " << e.what() << "\n";
        return kValidation;
    } catch (const std::length_error &e) {
        err << "qrmi: " << e.what() << "\n";
        return kValidation;
    } catch (const std::domain_error &e) {
        err << "qrmi: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception &e) {
        err << "qrmi: " << e.what() << "\n";
        return kNonConvergence;
    }
}

}  // namespace qrmi::cli
