#ifndef QRMI_VERIFY_H
#define QRMI_VERIFY_H

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qrmi {

struct VerifyOptions {
    int trials = 10;
    uint64_t seed = 42;
    int dim_a = 2;  ///< factor dimensions of random instances
    int dim_b = 2;
    int n = 3;  ///< copies for the universal suite
    int d = 2;  ///< local dimension for the universal suite
    int workers = 1;
};

/// One checked property. A trial passes when its violation is at most
/// `tolerance`; violations are measured so that 0 means exact agreement.
struct PropertyReport {
    std::string name;
    double tolerance = 0;
    int checks = 0;
    int passed = 0;
    double max_violation = 0;
};

struct SuiteReport {
    std::string suite;
    uint64_t seed = 0;
    int trials = 0;
    std::vector<PropertyReport> properties;
    /// Inputs and values of the first failing check in trial order.
    std::optional<nlohmann::json> counterexample;

    bool passed() const;
};

/// pinching, duality, additivity, universal, audenaert, derivative.
const std::vector<std::string> &suite_names();

/// Runs one suite. Trial t draws its inputs from a generator seeded by
/// (seed, suite, t), so the report does not depend on `workers`. Throws
/// std::invalid_argument for unknown suites or bad options.
SuiteReport run_suite(const std::string &suite, const VerifyOptions &options);

nlohmann::json to_json(const SuiteReport &report);

}  // namespace qrmi

#endif  // QRMI_VERIFY_H
