#include "kgprobe/graph.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <stdexcept>

#include "kgprobe/text.hpp"

namespace kgprobe {

std::string entity_id(const std::string& canonical_name) {
    return "e" + text::fnv1a64_hex(text::normalize_name(canonical_name));
}

const EntityNode& KnowledgeGraph::node(const std::string& id) const {
    auto it = nodes.find(id);
    if (it == nodes.end()) throw std::out_of_range("graph: unknown node id " + id);
    return it->second;
}

bool KnowledgeGraph::is_seed_id(const std::string& id) const {
    return std::find(seeds.begin(), seeds.end(), id) != seeds.end();
}

bool KnowledgeGraph::add_edge(FactTriplet t) {
    if (t.subject == t.object) return false;
    return edges.emplace(t.key(), std::move(t)).second;
}

std::set<std::string> KnowledgeGraph::neighbors(const std::string& id) const {
    std::set<std::string> out;
    for (const auto& [k, e] : edges) {
        if (e.subject == id) out.insert(e.object);
        if (e.object == id) out.insert(e.subject);
    }
    return out;
}

std::map<std::string, int> KnowledgeGraph::seed_distances() const {
    std::map<std::string, int> dist;
    std::deque<std::string> frontier;
    for (const auto& s : seeds) {
        dist[s] = 0;
        frontier.push_back(s);
    }
    while (!frontier.empty()) {
        auto id = frontier.front();
        frontier.pop_front();
        for (const auto& n : neighbors(id)) {
            if (dist.count(n)) continue;
            dist[n] = dist[id] + 1;
            frontier.push_back(n);
        }
    }
    return dist;
}

std::vector<std::string> KnowledgeGraph::validate() const {
    std::vector<std::string> bad;
    if (seeds.empty()) bad.push_back("seeds list is empty");
    for (const auto& s : seeds)
        if (!has_node(s)) bad.push_back("seed node missing: " + s);

    std::map<std::string, std::string> alias_owner;
    for (const auto& [id, n] : nodes) {
        if (n.id != id) bad.push_back("node key/id mismatch: " + id);
        if (n.canonical_name.empty()) bad.push_back("empty canonical name: " + id);
        if (!n.aliases.count(n.canonical_name))
            bad.push_back("canonical name not in alias set: " + id);
        if ((n.depth == 0) != n.is_seed)
            bad.push_back("depth-0/is_seed mismatch: " + id);
        if (n.relevance < 0 || n.relevance > 10)
            bad.push_back("relevance out of range: " + id);
        std::set<std::string> norm;
        for (const auto& a : n.aliases) {
            auto na = text::normalize_name(a);
            if (!norm.insert(na).second)
                bad.push_back("duplicate normalized alias '" + na + "' in " + id);
            auto [it, fresh] = alias_owner.emplace(na, id);
            if (!fresh && it->second != id)
                bad.push_back("alias '" + na + "' shared by " + it->second + " and " + id);
        }
    }
    for (const auto& [k, e] : edges) {
        if (!has_node(e.subject)) bad.push_back("dangling subject in " + k);
        if (!has_node(e.object)) bad.push_back("dangling object in " + k);
        if (e.subject == e.object) bad.push_back("self loop: " + k);
    }
    auto dist = seed_distances();
    for (const auto& [id, n] : nodes)
        if (!n.is_seed && !dist.count(id)) bad.push_back("unreachable node: " + id);

    try {
        budget.validate();
        int non_seed = 0;
        for (const auto& [id, n] : nodes)
            if (!n.is_seed) ++non_seed;
        if (non_seed > static_cast<int>(std::ceil(budget.n_total())))
            bad.push_back("node count exceeds ceil(n_total)");
        if (calls_used > static_cast<int>(std::ceil(budget.a_total())))
            bad.push_back("calls_used exceeds a_total");
    } catch (const std::exception& e) {
        bad.push_back(std::string("invalid budget: ") + e.what());
    }
    if (calls_used < 0) bad.push_back("negative calls_used");
    return bad;
}

nlohmann::json KnowledgeGraph::to_json() const {
    nlohmann::json jnodes = nlohmann::json::array();
    for (const auto& [id, n] : nodes) {
        jnodes.push_back({{"id", n.id},
                          {"canonical_name", n.canonical_name},
                          {"aliases", std::vector<std::string>(n.aliases.begin(), n.aliases.end())},
                          {"depth", n.depth},
                          {"relevance", n.relevance}});
    }
    nlohmann::json jedges = nlohmann::json::array();
    for (const auto& [k, e] : edges) {
        jedges.push_back({{"subject", e.subject},
                          {"relation", e.relation},
                          {"object", e.object},
                          {"expected_forget", e.expected_forget},
                          {"provenance", e.provenance}});
    }
    return {{"seeds", seeds},
            {"nodes", jnodes},
            {"edges", jedges},
            {"budget", budget.to_json()},
            {"calls_used", calls_used},
            {"truncated", truncated}};
}

KnowledgeGraph KnowledgeGraph::from_json(const nlohmann::json& j) {
    KnowledgeGraph g;
    g.seeds = j.at("seeds").get<std::vector<std::string>>();
    for (const auto& jn : j.at("nodes")) {
        EntityNode n;
        n.id = jn.at("id").get<std::string>();
        n.canonical_name = jn.at("canonical_name").get<std::string>();
        for (const auto& a : jn.at("aliases")) n.aliases.insert(a.get<std::string>());
        n.depth = jn.at("depth").get<int>();
        n.relevance = jn.at("relevance").get<int>();
        n.is_seed = std::find(g.seeds.begin(), g.seeds.end(), n.id) != g.seeds.end();
        g.nodes.emplace(n.id, std::move(n));
    }
    for (const auto& je : j.at("edges")) {
        FactTriplet e;
        e.subject = je.at("subject").get<std::string>();
        e.relation = je.at("relation").get<std::string>();
        e.object = je.at("object").get<std::string>();
        e.expected_forget = je.at("expected_forget").get<bool>();
        e.provenance = je.at("provenance").get<std::string>();
        g.edges.emplace(e.key(), std::move(e));
    }
    g.budget = ExpansionBudget::from_json(j.at("budget"));
    g.calls_used = j.at("calls_used").get<int>();
    g.truncated = j.value("truncated", false);
    return g;
}

std::string KnowledgeGraph::canonical_text() const { return to_json().dump() + "\n"; }

std::string KnowledgeGraph::content_hash() const {
    return text::fnv1a64_hex(canonical_text());
}

std::vector<TripletChain> paths_from_seed(const KnowledgeGraph& graph,
                                          const std::string& target,
                                          int length) {
    if (!graph.has_node(target)) throw std::out_of_range("paths_from_seed: unknown target");
    if (length < 1) throw std::invalid_argument("paths_from_seed: length must be >= 1");

    std::vector<TripletChain> out;
    TripletChain partial(length);
    std::set<std::string> visited{target};

    // Grow the chain backwards from the target; hop `pos` ends at `at`.
    std::function<void(const std::string&, int)> grow = [&](const std::string& at, int pos) {
        for (const auto& [k, e] : graph.edges) {
            bool terminal = pos == length - 1;
            if (terminal && !e.expected_forget) continue;
            for (bool inverted : {false, true}) {
                const std::string& to = inverted ? e.subject : e.object;
                const std::string& from = inverted ? e.object : e.subject;
                if (to != at || visited.count(from)) continue;
                partial[pos] = {k, e.relation, inverted, from, to};
                if (pos == 0) {
                    out.push_back(partial);
                } else {
                    visited.insert(from);
                    grow(from, pos - 1);
                    visited.erase(from);
                }
            }
        }
    };
    grow(target, length - 1);

    auto chain_key = [](const TripletChain& c) {
        std::string k;
        for (const auto& h : c) {
            k += h.edge_key;
            k += h.inverted ? "~" : "-";
        }
        return k;
    };
    std::sort(out.begin(), out.end(), [&](const TripletChain& a, const TripletChain& b) {
        return chain_key(a) < chain_key(b);
    });
    return out;
}

}  // namespace kgprobe
