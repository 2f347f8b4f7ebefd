#pragma once

#include <string>
#include <vector>

namespace shelab {

/// One line of a verification battery: the measured statistic, the threshold it is held
/// against and the verdict. `error` is a standard error or tolerance band when one exists.
struct CheckRecord {
    std::string name;
    double value = 0.0;
    double error = 0.0;
    double threshold = 0.0;
    bool passed = false;
    bool informational = false;  // reported, but not part of the verdict
    std::string detail;
};

using CheckList = std::vector<CheckRecord>;

inline bool all_passed(const CheckList& checks) {
    for (const auto& c : checks) {
        if (!c.informational && !c.passed) return false;
    }
    return true;
}

}  // namespace shelab
