#pragma once

#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgprobe/budget.hpp"
#include "kgprobe/gateway.hpp"

namespace kgprobe {

// "synthetic:<world.json>[:<profile.json>]" or an http(s) base URL.
struct EndpointSpec {
    std::string uri;
    std::string model_id = "default";
    int max_in_flight = 1;
    std::optional<std::string> cache_path;

    nlohmann::json to_json() const;
};

std::shared_ptr<ModelEndpoint> make_endpoint(const EndpointSpec& spec);

struct RunConfig {
    std::vector<std::string> seeds;
    ExpansionBudget budget;

    int per_kind = 100;
    uint64_t sample_seed = 7;
    int max_hops = 3;
    int top_relations = 5;
    bool strict_scores = false;
    bool allow_truncated = false;

    EndpointSpec target;                  // pre-unlearning model
    EndpointSpec unlearned;               // post-unlearning model under evaluation
    std::optional<EndpointSpec> judge;    // optional grading judge

    std::string graph_path = "graph.json";
    std::string probes_path = "probes.jsonl";
    std::string filtered_path = "probes_filtered.jsonl";
    std::string manifest_path = "manifest.json";
    std::string results_path = "results.json";
    std::string model_label = "unlearned";

    void validate() const;
    static RunConfig from_toml(const std::string& body);
    static RunConfig from_file(const std::string& path);
};

// Minimal key/value-with-tables config parser. Values use JSON syntax
// (strings quoted, arrays bracketed); lines starting with # are comments.
nlohmann::json parse_config_tables(const std::string& body);

// Stage names: build-graph, gen-probes, prefilter, evaluate. Empty set runs
// everything. Returns 0 on success. Each stage skips itself when its output
// already embeds the current input hash.
int run_pipeline(const RunConfig& config, const std::set<std::string>& stages, std::ostream& log);

// File helpers shared with the CLI.
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& body);

}  // namespace kgprobe
