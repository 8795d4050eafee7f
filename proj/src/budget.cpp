#include "kgprobe/budget.hpp"

#include <algorithm>
#include <cmath>

namespace kgprobe {

void ExpansionBudget::validate() const {
    if (b0 < 1) throw std::invalid_argument("budget: b0 must be positive");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("budget: alpha must lie in (0,1); the closed form is singular at alpha=1");
    if (d_max < 0) throw std::invalid_argument("budget: d_max must be non-negative");
    if (k < 1) throw std::invalid_argument("budget: k must be positive");
    if (relevance_threshold < 0 || relevance_threshold > 10)
        throw std::invalid_argument("budget: relevance_threshold must be in 0..10");
}

double ExpansionBudget::n_total() const {
    validate();
    return b0 * (1.0 - std::pow(alpha, d_max + 1)) / (1.0 - alpha);
}

double ExpansionBudget::a_total() const { return k * n_total(); }

int ExpansionBudget::level_width(int depth) const {
    validate();
    if (depth < 0 || depth > d_max)
        throw std::out_of_range("level_width: depth outside 0..d_max");
    double w = b0 * std::pow(alpha, depth);
    return std::max(1, static_cast<int>(std::floor(w)));
}

nlohmann::json ExpansionBudget::to_json() const {
    return {{"b0", b0},
            {"alpha", alpha},
            {"d_max", d_max},
            {"k", k},
            {"relevance_threshold", relevance_threshold}};
}

ExpansionBudget ExpansionBudget::from_json(const nlohmann::json& j) {
    ExpansionBudget b;
    b.b0 = j.at("b0").get<int>();
    b.alpha = j.at("alpha").get<double>();
    b.d_max = j.at("d_max").get<int>();
    b.k = j.at("k").get<int>();
    b.relevance_threshold = j.value("relevance_threshold", 6);
    b.validate();
    return b;
}

std::pair<double, double> estimate_totals(const ExpansionBudget& budget) {
    return {budget.n_total(), budget.a_total()};
}

}  // namespace kgprobe
