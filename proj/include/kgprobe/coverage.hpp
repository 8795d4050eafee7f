#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "kgprobe/gateway.hpp"
#include "kgprobe/graph.hpp"

namespace kgprobe {

struct BenchmarkProbe {
    std::string source;
    std::string question;
    std::vector<std::string> answers;  // non-empty
    bool open_ended = false;

    nlohmann::json to_json() const;
    static BenchmarkProbe from_json(const nlohmann::json& j);
};

std::vector<BenchmarkProbe> benchmark_from_jsonl(const std::string& body);

// Prompt sent to the extractor endpoint; the expected reply is
// "entity | relation" or "UNPARSEABLE".
std::string extract_key_prompt(const std::string& question);

// nullopt marks the probe unmatchable.
std::optional<std::pair<std::string, std::string>> extract_key(ModelEndpoint& endpoint,
                                                               const BenchmarkProbe& probe);

// Relation labels compared by normalized equality, optionally widened by a
// synonym table (normalized label -> equivalence class members).
using SynonymTable = std::map<std::string, std::set<std::string>>;

bool is_covered(const KnowledgeGraph& graph, const std::string& entity,
                const std::string& relation, const std::vector<std::string>& answers,
                bool open_ended, const SynonymTable* synonyms = nullptr);

struct CoverageReport {
    int total = 0;
    int matched = 0;
    int unmatched = 0;
    int unmatchable = 0;
    double coverage = 0.0;  // matched / total

    nlohmann::json to_json() const;
};

CoverageReport measure_coverage(const KnowledgeGraph& graph, ModelEndpoint& extractor,
                                const std::vector<BenchmarkProbe>& benchmark,
                                const SynonymTable* synonyms = nullptr);

struct CurvePoint {
    int node_count = 0;
    double coverage = 0.0;
};

// Graphs ordered by growing budget; non-nested pairs only warn to stderr.
std::vector<CurvePoint> coverage_curve(const std::vector<KnowledgeGraph>& graphs_by_budget,
                                       ModelEndpoint& extractor,
                                       const std::vector<BenchmarkProbe>& benchmark,
                                       const SynonymTable* synonyms = nullptr);

}  // namespace kgprobe
