#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgprobe/budget.hpp"

namespace kgprobe {

struct EntityNode {
    std::string id;
    std::string canonical_name;
    std::set<std::string> aliases;  // includes canonical_name
    int depth = 0;
    int relevance = 10;
    bool is_seed = false;
};

// Content-addressed node id, stable across runs and alias merges.
std::string entity_id(const std::string& canonical_name);

struct FactTriplet {
    std::string subject;  // node id
    std::string relation;
    std::string object;  // node id
    bool expected_forget = false;
    std::string provenance;  // hash of the elicitation text it came from

    std::string key() const { return subject + "|" + relation + "|" + object; }
    bool operator<(const FactTriplet& o) const { return key() < o.key(); }
};

// One hop of a multi-hop chain. `inverted` means the edge is traversed
// object -> subject; `from`/`to` are the node ids in traversal order.
struct ChainHop {
    std::string edge_key;
    std::string relation;
    bool inverted = false;
    std::string from;
    std::string to;
};

using TripletChain = std::vector<ChainHop>;

struct KnowledgeGraph {
    std::vector<std::string> seeds;  // node ids
    std::map<std::string, EntityNode> nodes;
    std::map<std::string, FactTriplet> edges;  // keyed by FactTriplet::key()
    ExpansionBudget budget;
    int calls_used = 0;
    bool truncated = false;

    const EntityNode& node(const std::string& id) const;
    bool has_node(const std::string& id) const { return nodes.count(id) > 0; }
    bool is_seed_id(const std::string& id) const;

    // Inserts an edge; returns false for duplicates or self loops.
    bool add_edge(FactTriplet t);

    // Violation messages; empty when every invariant holds.
    std::vector<std::string> validate() const;

    // Node ids adjacent to `id` over undirected edges.
    std::set<std::string> neighbors(const std::string& id) const;

    // Undirected BFS distance of every node from the seed set.
    std::map<std::string, int> seed_distances() const;

    nlohmann::json to_json() const;
    static KnowledgeGraph from_json(const nlohmann::json& j);

    // Byte-stable serialization: sorted keys, UTF-8, newline terminated.
    std::string canonical_text() const;
    std::string content_hash() const;
};

// Every simple chain of exactly `length` edges whose final hop resolves to
// `target` over an expected_forget edge. Chains are sorted by their edge-key
// sequence so the output order is canonical.
std::vector<TripletChain> paths_from_seed(const KnowledgeGraph& graph,
                                          const std::string& target,
                                          int length);

}  // namespace kgprobe
