#pragma once

// Verification suites shared by the command-line tool and the acceptance runner.
// Each numbered criterion is an instance matrix with thresholds fixed here.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "itpl/iterated.hpp"

namespace itpl::suites {

struct Check {
    std::string label;
    Complex value;
    Complex reference;
    double err_abs = 0;
    double residual = 0;  // relative unless the label says otherwise
    double threshold = 0;
    bool pass = false;
};

struct Outcome {
    int criterion = 0;
    std::string title;
    std::vector<Check> checks;
    double seconds = 0;
    double time_limit = 0;  // seconds, 0 = none
    double slowest_instance = 0;
    double instance_limit = 0;  // per instance, 0 = none
    bool skipped = false;
    std::string note;

    bool pass() const;
};

struct Options {
    VerticalPathSpec path;
    /// Replaces every numeric threshold (exact checks stay exact).
    std::optional<double> threshold;
    std::uint64_t seed = 20240611;
    std::string data_dir;
    /// Twisted criterion: coefficient file (default data_dir/level11_eta.json) and base point.
    std::optional<std::string> twisted_file;
    std::optional<Complex> base_point{Complex(0.0, 1.0)};
};

inline constexpr int kCriteria = 12;

/// Runs criterion 1..12. Library errors are caught and recorded as failed checks.
Outcome run_criterion(int k, const Options& opt);

/// Criteria covered by a suite name (mellin, theorem1, ..., all). Throws ConfigurationError.
std::vector<int> suite_criteria(const std::string& suite);

}  // namespace itpl::suites
