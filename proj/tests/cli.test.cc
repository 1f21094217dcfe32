#include "cli.h"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

using namespace qrmi::cli;
using nlohmann::json;

namespace {

struct CliRun {
    int code = 0;
    std::string out;
    std::string err;
};

CliRun run(const std::vector<std::string> &args) {
    std::ostringstream out;
    std::ostringstream err;
    CliRun r;
    r.code = run_cli(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::vector<std::vector<std::string>> csv(const std::string &text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            cells.push_back(cell);
        }
        rows.push_back(cells);
    }
    return rows;
}

std::string temp_path(const std::string &name) {
    return (std::filesystem::temp_directory_path() / ("qrmi_cli_test_" + name)).string();
}

}  // namespace

TEST(cli, grid_parsing) {
    EXPECT_EQ(parse_grid("0.5").size(), 1u);
    EXPECT_EQ(parse_grid("0.1,0.2,inf").back(), INFINITY);
    const std::vector<double> r = parse_grid("0.1:1:0.1");
    ASSERT_EQ(r.size(), 10u);
    EXPECT_DOUBLE_EQ(r.front(), 0.1);
    EXPECT_NEAR(r.back(), 1.0, 1e-12);
    EXPECT_EQ(parse_int_grid("1:5:1"), (std::vector<int>{1, 2, 3, 4, 5}));
    EXPECT_THROW(parse_grid(""), std::invalid_argument);
    EXPECT_THROW(parse_grid("1:0:0.1"), std::invalid_argument);
    EXPECT_THROW(parse_grid("0:1:0"), std::invalid_argument);
    EXPECT_THROW(parse_grid("abc"), std::invalid_argument);
    EXPECT_THROW(parse_int_grid("1.5"), std::invalid_argument);
}

TEST(cli, compute_examples) {
    CliRun bell = run({"compute", "mi", "--kind", "sandwiched", "--alpha", "2", "--state", "bell", "--tau", "marginal"});
    ASSERT_EQ(bell.code, kOk) << bell.err;
    const json b = json::parse(bell.out);
    EXPECT_NEAR(b["value"].get<double>(), 2 * std::log(2.0), 1e-9);
    EXPECT_TRUE(b["converged"].get<bool>());
    EXPECT_TRUE(b.contains("minimizer"));

    CliRun product = run({"compute", "mi", "--alpha", "1", "--state", "product", "--tau", "marginal"});
    ASSERT_EQ(product.code, kOk);
    EXPECT_NEAR(json::parse(product.out)["value"].get<double>(), 0, 1e-12);

    const std::string path = temp_path("rho.json");
    std::ofstream(path) << R"({"dim": 2, "entries": [[[0.6, 0], [0.1, 0.05]], [[0.1, -0.05], [0.4, 0]]]})";
    CliRun same = run({"compute", "divergence", "--kind", "petz", "--alpha", "1", "--rho", path, "--sigma", path});
    ASSERT_EQ(same.code, kOk) << same.err;
    EXPECT_NEAR(json::parse(same.out)["value"].get<double>(), 0, 1e-12);
    std::remove(path.c_str());

    CliRun grid = run({"compute", "mi", "--kind", "petz", "--alpha", "0.5,2", "--state", "correlated-bits", "--format", "csv"});
    ASSERT_EQ(grid.code, kOk);
    const auto rows = csv(grid.out);
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"quantity", "kind", "alpha", "value", "method", "converged"}));
    EXPECT_NEAR(std::stod(rows[1][3]), std::log(2.0), 1e-12);
}

TEST(cli, exponents_examples) {
    CliRun h = run({"exponents", "--mode", "hoeffding", "--state", "product", "--tau", "marginal", "--R", "0.1:1:0.1"});
    ASSERT_EQ(h.code, kOk) << h.err;
    const auto rows = csv(h.out);
    ASSERT_EQ(rows.size(), 11u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"R", "value", "s_star", "regime"}));
    for (size_t i = 1; i < rows.size(); i++) {
        EXPECT_EQ(rows[i][1], "0");
    }

    CliRun sc = run({"exponents", "--mode", "strong-converse", "--state", "correlated-bits", "--R", "1.0"});
    ASSERT_EQ(sc.code, kOk);
    const auto sc_rows = csv(sc.out);
    EXPECT_NEAR(std::stod(sc_rows[1][1]), 1 - std::log(2.0), 1e-9);
    EXPECT_EQ(sc_rows[1][2], "inf");
    EXPECT_EQ(sc_rows[1][3], "AboveITildeInf");

    CliRun so = run({"exponents", "--mode", "second-order", "--state", "bell", "--r", "0"});
    ASSERT_EQ(so.code, kOk);
    EXPECT_EQ(so.out, "r,phi\n0,0.5\n");
}

TEST(cli, bits_are_nats_over_ln2) {
    const std::vector<std::string> base = {"exponents", "--mode", "strong-converse", "--state", "werner:0.8", "--R", "1,1.5"};
    std::vector<std::string> bits_args = base;
    bits_args.insert(bits_args.end(), {"--units", "bits"});
    CliRun nats = run(base);
    CliRun bits = run(bits_args);
    ASSERT_EQ(nats.code, kOk);
    ASSERT_EQ(bits.code, kOk);
    const auto n = csv(nats.out);
    const auto b = csv(bits.out);
    ASSERT_EQ(n.size(), b.size());
    for (size_t i = 1; i < n.size(); i++) {
        EXPECT_EQ(std::stod(b[i][0]), std::stod(n[i][0]) / std::log(2.0));
        EXPECT_EQ(std::stod(b[i][1]), std::stod(n[i][1]) / std::log(2.0));
        EXPECT_EQ(b[i][2], n[i][2]);
    }
}

TEST(cli, experiment_examples) {
    CliRun h = run({"experiment", "--mode", "hoeffding", "--state", "correlated-bits", "--n", "1:5:1", "--s", "0.5", "--R", "0.3"});
    ASSERT_EQ(h.code, kOk) << h.err;
    auto rows = csv(h.out);
    ASSERT_EQ(rows.size(), 6u);
    EXPECT_EQ(rows[0], (std::vector<std::string>{"n", "R_or_mu", "alpha1", "beta", "bound", "satisfied"}));
    for (size_t i = 1; i < rows.size(); i++) {
        EXPECT_EQ(rows[i][5], "true");
    }

    CliRun sc = run({"experiment", "--mode", "strong-converse", "--state", "werner:0.7", "--n", "1:3:1", "--s", "2", "--R", "0.5"});
    ASSERT_EQ(sc.code, kOk) << sc.err;
    rows = csv(sc.out);
    for (size_t i = 1; i < rows.size(); i++) {
        const int n = std::stoi(rows[i][0]);
        EXPECT_LE(std::stod(rows[i][3]), std::exp(-n * 0.5) + 1e-9);
        EXPECT_EQ(rows[i][5], "true");
    }

    CliRun trivial = run({"experiment", "--mode", "hoeffding", "--state", "product", "--n", "1", "--s", "0.5", "--R", "0.1"});
    ASSERT_EQ(trivial.code, kOk);
    rows = csv(trivial.out);
    EXPECT_GE(std::stod(rows[1][2]) + std::stod(rows[1][3]), 1 - 1e-9);
    EXPECT_EQ(rows[1][5], "true");

    CliRun np = run({"experiment", "--mode", "np", "--state", "werner:0.5", "--n", "1,2", "--mu", "-1,-2"});
    ASSERT_EQ(np.code, kOk) << np.err;
    rows = csv(np.out);
    ASSERT_EQ(rows.size(), 5u);
    for (size_t i = 1; i < rows.size(); i++) {
        EXPECT_NEAR(std::stod(rows[i][3]), std::exp(std::stod(rows[i][1])), 1e-12);
    }
}

TEST(cli, verify_reports_and_is_deterministic) {
    const std::string a = temp_path("verify_a.json");
    const std::string b = temp_path("verify_b.json");
    CliRun first = run({"verify", "--suite", "pinching", "--trials", "20", "--seed", "42", "--dims", "2", "2", "-o", a});
    CliRun second = run({"verify", "--suite", "pinching", "--trials", "20", "--seed", "42", "--dims", "2", "2", "-o", b});
    ASSERT_EQ(first.code, kOk) << first.err;
    ASSERT_EQ(second.code, kOk);
    std::ifstream fa(a);
    std::ifstream fb(b);
    const std::string ta((std::istreambuf_iterator<char>(fa)), std::istreambuf_iterator<char>());
    const std::string tb((std::istreambuf_iterator<char>(fb)), std::istreambuf_iterator<char>());
    EXPECT_EQ(ta, tb);
    const json doc = json::parse(ta);
    EXPECT_TRUE(doc["passed"].get<bool>());
    EXPECT_EQ(doc["seed"].get<uint64_t>(), 42u);
    for (const json &p : doc["suites"][0]["properties"]) {
        EXPECT_EQ(p["checks"], p["passed"]);
        EXPECT_LT(p["max_violation"].get<double>(), 1e-8);
    }
    std::remove(a.c_str());
    std::remove(b.c_str());

    CliRun universal = run({"verify", "--suite", "universal", "--n", "3", "--d", "2", "--trials", "100"});
    EXPECT_EQ(universal.code, kOk);
    CliRun all = run({"verify", "--suite", "all", "--trials", "1"});
    EXPECT_EQ(all.code, kOk) << all.err;
    EXPECT_EQ(json::parse(all.out)["suites"].size(), 6u);
}

TEST(cli, validation_errors_exit_1) {
    EXPECT_EQ(run({}).code, kValidation);
    EXPECT_EQ(run({"compute"}).code, kValidation);
    EXPECT_EQ(run({"compute", "mi", "--state", "nope"}).code, kValidation);
    EXPECT_EQ(run({"compute", "mi", "--state", "werner:2"}).code, kValidation);
    EXPECT_EQ(run({"compute", "mi", "--kind", "sandwiched", "--alpha", "0.3", "--state", "bell"}).code, kValidation);
    EXPECT_EQ(run({"exponents", "--mode", "hoeffding", "--state", "bell"}).code, kValidation);
    EXPECT_EQ(run({"exponents", "--mode", "hoeffding", "--state", "bell", "--R", "-1"}).code, kValidation);
    EXPECT_EQ(run({"experiment", "--mode", "hoeffding", "--state", "bell", "--R", "0.1", "--s", "2"}).code, kValidation);
    EXPECT_EQ(run({"experiment", "--mode", "hoeffding", "--state", "bell", "--R", "0.1", "--n", "9"}).code, kValidation);
    EXPECT_EQ(run({"verify", "--suite", "bogus"}).code, kValidation);
    EXPECT_EQ(run({"compute", "mi", "--state", "bell", "--units", "furlongs"}).code, kValidation);
    EXPECT_EQ(run({"--help"}).code, kOk);
}
