#pragma once

#include <stdexcept>
#include <utility>

#include "json.hpp"

namespace kgprobe {

// Parameter bundle governing graph growth. The closed forms are
//   n_total = b0 * (1 - alpha^(d_max+1)) / (1 - alpha)
//   a_total = k * n_total
// with per-level width b_i = b0 * alpha^i, floored and clamped to 1 so
// expansion never stalls before d_max.
struct ExpansionBudget {
    int b0 = 10;
    double alpha = 0.8;
    int d_max = 2;
    int k = 3;
    int relevance_threshold = 6;

    void validate() const;
    double n_total() const;
    double a_total() const;
    int level_width(int depth) const;  // 0 <= depth <= d_max

    nlohmann::json to_json() const;
    static ExpansionBudget from_json(const nlohmann::json& j);
};

std::pair<double, double> estimate_totals(const ExpansionBudget& budget);

}  // namespace kgprobe
