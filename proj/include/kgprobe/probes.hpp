#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgprobe/gateway.hpp"
#include "kgprobe/graph.hpp"

namespace kgprobe {

enum class ProbeKind {
    forget_1hop,
    forget_2hop,
    forget_3hop,
    forget_alias,
    forget_decomposed,
    retain_1away,
    retain_2away,
    retain_relation,
};

const std::vector<ProbeKind>& all_probe_kinds();
std::string to_string(ProbeKind k);
ProbeKind probe_kind_from_string(const std::string& s);
bool is_forget_kind(ProbeKind k);

struct Probe {
    std::string id;  // content hash of the question text
    ProbeKind kind = ProbeKind::forget_1hop;
    std::string question;
    std::vector<std::string> expected;  // sorted acceptable surface forms
    std::string canonical_answer;
    std::vector<ChainHop> path;
    bool prefilter_passed = false;

    nlohmann::json to_json() const;
    static Probe from_json(const nlohmann::json& j);
};

std::string probe_id_for(const std::string& question);

// One probe per expected_forget edge, asked forward (subject, relation -> object).
std::vector<Probe> gen_single_hop(const KnowledgeGraph& graph);

// One probe per n-edge chain whose terminal hop is an expected_forget edge.
std::vector<Probe> gen_multi_hop(const KnowledgeGraph& graph, int n);

// Copy with the mentioned entity replaced by a non-canonical alias; nullopt
// when no mentioned entity has an alternative surface form.
std::optional<Probe> perturb_alias(const KnowledgeGraph& graph, const Probe& probe);

// Wraps a 2/3-hop probe in the step-by-step scaffold. Throws on any other kind.
Probe decompose(const Probe& probe);

struct RetentionOptions {
    int top_relations = 5;
};
std::vector<Probe> gen_retention(const KnowledgeGraph& graph, RetentionOptions opts = {});

struct PrefilterResult {
    std::vector<Probe> probes;
    bool partial = false;  // budget ran out mid-filter
    int passed = 0;
};
PrefilterResult prefilter(ModelEndpoint& target, std::vector<Probe> probes);

struct SampleResult {
    std::vector<Probe> probes;
    std::map<std::string, int> shortfall;  // kind -> missing count
};
SampleResult sample(const std::vector<Probe>& probes, int per_kind, uint64_t seed);

// Mechanical replay of a probe's path over the graph; returns the canonical
// answer the path resolves to, or nullopt if the path does not hold.
std::optional<std::string> replay_path(const KnowledgeGraph& graph, const Probe& probe);

struct Manifest {
    std::string graph_hash;
    std::map<std::string, std::vector<std::string>> kinds;  // kind -> probe ids
    uint64_t sample_seed = 0;
    int per_kind = 100;
    std::map<std::string, int> shortfall;
    bool prefilter_partial = false;

    nlohmann::json to_json() const;
    static Manifest from_json(const nlohmann::json& j);
};

Manifest build_manifest(const KnowledgeGraph& graph, const SampleResult& sampled,
                        uint64_t sample_seed, int per_kind, bool prefilter_partial);

std::string probes_to_jsonl(const std::vector<Probe>& probes);
std::vector<Probe> probes_from_jsonl(const std::string& body);

}  // namespace kgprobe
