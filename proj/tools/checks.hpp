#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace sclab::checks {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct CheckResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// Sample counts of the three Monte-Carlo checks; the rest of the suite is fixed.
struct Scale {
    std::size_t main_samples = 64;
    std::size_t singular_samples = 32;
    std::size_t operator_samples = 1024;
};

// Runs every check in a fixed order (the Husimi minimum last, since it reads the
// values produced by the others). Exceptions count as failures.
std::vector<CheckResult> run_all(const Scale& scale, const std::function<void(const CheckResult&)>& on_result = {});

std::string format_line(const CheckResult& r);

}  // namespace sclab::checks
