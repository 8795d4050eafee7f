#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgprobe/gateway.hpp"
#include "kgprobe/probes.hpp"

namespace kgprobe {

struct GradedAnswer {
    std::string probe_id;
    std::string raw_answer;
    bool correct = false;
    std::string grader;  // "string_match" or "judge"

    nlohmann::json to_json() const;
};

// Normalized token-boundary containment of any expected surface form; an
// optional judge endpoint breaks the tie when string match says no.
GradedAnswer grade(const std::vector<std::string>& expected, const std::string& raw,
                   ModelEndpoint* judge = nullptr);

struct ScoreReport {
    std::string model_label;
    std::map<std::string, double> acc;  // kind -> accuracy in [0,1]
    double forget_score = 0.0;          // mean over forget_{1,2,3}hop
    double retain_score = 0.0;          // mean over retain_{1away,2away,relation}
    double overall = 0.0;               // harmonic mean of (1-F, R)
    std::map<std::string, int> n_per_kind;

    nlohmann::json to_json() const;
    static ScoreReport from_json(const nlohmann::json& j);
};

double harmonic_overall(double forget_score, double retain_score);

// Builds a report from per-kind (correct, total) tallies. Missing score
// components are skipped with a warning to stderr; strict mode throws.
ScoreReport aggregate_scores(const std::string& model_label,
                             const std::map<ProbeKind, std::pair<int, int>>& counts,
                             bool strict = false);

// Convenience for paper-style tables: six accuracies on the percent scale
// (1hop, 2hop, 3hop forget; 1away, 2away, relation retention) in, percent
// (F, R, overall) out.
struct PercentScores {
    double forget = 0.0;
    double retain = 0.0;
    double overall = 0.0;
};
PercentScores scores_from_percent_accuracies(const std::array<double, 6>& acc);

struct EvaluationResult {
    ScoreReport report;
    std::vector<GradedAnswer> graded;
};

// Grades every sampled probe against the endpoint. All probes must have
// passed the prefilter.
EvaluationResult evaluate(ModelEndpoint& endpoint, const std::vector<Probe>& sampled,
                          const std::string& model_label, ModelEndpoint* judge = nullptr,
                          bool strict = false);

// Rank correlation with average ranks for ties. Throws on length mismatch,
// n < 3, or a constant input vector.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

// Two-sided p-value via the t approximation with n-2 degrees of freedom.
double spearman_pvalue(double rho, int n);

// Table shaped like the per-method score tables, one row per results file.
std::string compare_markdown(const std::vector<nlohmann::json>& results);

nlohmann::json results_json(const std::string& model_label, const std::string& graph_hash,
                            const std::string& manifest_hash, const EvaluationResult& ev);

}  // namespace kgprobe
