#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "kgprobe/budget.hpp"
#include "kgprobe/gateway.hpp"
#include "kgprobe/graph.hpp"

namespace kgprobe {

// Raw extracted triple; entity fields are surface names, not node ids.
struct TripletDraft {
    std::string subject;
    std::string relation;
    std::string object;
};

// Two-call elicitation: question generation, then answering. Returns the
// concatenated answer text.
std::string elicit(ModelEndpoint& endpoint, const std::string& entity_name);

// Pure line parser for "(subject, relation, object)" output; malformed lines
// are dropped.
std::vector<TripletDraft> parse_triplet_lines(const std::string& raw);

std::vector<TripletDraft> extract_triplets(ModelEndpoint& endpoint,
                                           const std::string& elicited_text);

struct BuildDiagnostics {
    int relevance_unparseable = 0;  // edges dropped on unreadable judge output
    int edges_filtered = 0;
    int alias_merges = 0;
    int alias_calls = 0;
};

// Full build: BFS expansion under the budget, relevance filtering against
// each node's root seed, forget judgement, alias merging, depth recompute.
// Budget exhaustion sets graph.truncated instead of throwing.
KnowledgeGraph expand(ModelEndpoint& endpoint, const std::vector<std::string>& seeds,
                      const ExpansionBudget& budget, std::ostream* log = nullptr,
                      BuildDiagnostics* diag = nullptr);

// Standalone relevance pass for a single-seed graph: scores every edge
// against `seed_name`, drops edges below `threshold`, marks expected_forget,
// prunes nodes left unreachable from the seeds.
KnowledgeGraph filter_relevance(ModelEndpoint& endpoint, KnowledgeGraph graph,
                                const std::string& seed_name, int threshold,
                                BuildDiagnostics* diag = nullptr);

// Merges nodes the model confirms as aliases. Candidate pairs share a name
// token or have Jaro-Winkler similarity >= 0.85.
KnowledgeGraph resolve_aliases(ModelEndpoint& endpoint, KnowledgeGraph graph,
                               BuildDiagnostics* diag = nullptr);

}  // namespace kgprobe
