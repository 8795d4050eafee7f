#include "kgprobe/probes.hpp"

#include <algorithm>
#include <deque>
#include <random>
#include <sstream>
#include <stdexcept>

#include "kgprobe/questions.hpp"
#include "kgprobe/scorer.hpp"
#include "kgprobe/text.hpp"

namespace kgprobe {

const std::vector<ProbeKind>& all_probe_kinds() {
    static const std::vector<ProbeKind> kinds = {
        ProbeKind::forget_1hop,    ProbeKind::forget_2hop,     ProbeKind::forget_3hop,
        ProbeKind::forget_alias,   ProbeKind::forget_decomposed, ProbeKind::retain_1away,
        ProbeKind::retain_2away,   ProbeKind::retain_relation};
    return kinds;
}

std::string to_string(ProbeKind k) {
    switch (k) {
        case ProbeKind::forget_1hop: return "forget_1hop";
        case ProbeKind::forget_2hop: return "forget_2hop";
        case ProbeKind::forget_3hop: return "forget_3hop";
        case ProbeKind::forget_alias: return "forget_alias";
        case ProbeKind::forget_decomposed: return "forget_decomposed";
        case ProbeKind::retain_1away: return "retain_1away";
        case ProbeKind::retain_2away: return "retain_2away";
        case ProbeKind::retain_relation: return "retain_relation";
    }
    throw std::invalid_argument("unknown probe kind");
}

ProbeKind probe_kind_from_string(const std::string& s) {
    for (ProbeKind k : all_probe_kinds())
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown probe kind: " + s);
}

bool is_forget_kind(ProbeKind k) {
    return k == ProbeKind::forget_1hop || k == ProbeKind::forget_2hop ||
           k == ProbeKind::forget_3hop || k == ProbeKind::forget_alias ||
           k == ProbeKind::forget_decomposed;
}

std::string probe_id_for(const std::string& question) {
    return "q" + text::fnv1a64_hex(question);
}

nlohmann::json Probe::to_json() const {
    nlohmann::json jpath = nlohmann::json::array();
    for (const auto& h : path)
        jpath.push_back({{"edge_key", h.edge_key},
                         {"relation", h.relation},
                         {"inverted", h.inverted},
                         {"from", h.from},
                         {"to", h.to}});
    return {{"id", id},
            {"kind", to_string(kind)},
            {"question", question},
            {"expected", expected},
            {"canonical_answer", canonical_answer},
            {"path", jpath},
            {"prefilter_passed", prefilter_passed}};
}

Probe Probe::from_json(const nlohmann::json& j) {
    Probe p;
    p.id = j.at("id").get<std::string>();
    p.kind = probe_kind_from_string(j.at("kind").get<std::string>());
    p.question = j.at("question").get<std::string>();
    p.expected = j.at("expected").get<std::vector<std::string>>();
    p.canonical_answer = j.at("canonical_answer").get<std::string>();
    for (const auto& jh : j.at("path")) {
        ChainHop h;
        h.edge_key = jh.at("edge_key").get<std::string>();
        h.relation = jh.at("relation").get<std::string>();
        h.inverted = jh.at("inverted").get<bool>();
        h.from = jh.at("from").get<std::string>();
        h.to = jh.at("to").get<std::string>();
        p.path.push_back(std::move(h));
    }
    p.prefilter_passed = j.at("prefilter_passed").get<bool>();
    if (p.expected.empty()) throw std::invalid_argument("probe with empty expected set: " + p.id);
    return p;
}

namespace {

std::vector<std::string> sorted_aliases(const EntityNode& n) {
    std::vector<std::string> out(n.aliases.begin(), n.aliases.end());
    std::sort(out.begin(), out.end());
    return out;
}

Probe probe_from_chain(const KnowledgeGraph& graph, const TripletChain& chain, ProbeKind kind) {
    questions::QuestionSpec spec;
    spec.base_entity = graph.node(chain.front().from).canonical_name;
    for (const auto& hop : chain) spec.steps.push_back({hop.relation, hop.inverted});

    const EntityNode& answer = graph.node(chain.back().to);
    Probe p;
    p.kind = kind;
    p.question = questions::render(spec);
    p.id = probe_id_for(p.question);
    p.expected = sorted_aliases(answer);
    p.canonical_answer = answer.canonical_name;
    p.path = chain;
    return p;
}

// Line-graph BFS distance of every edge from the nearest expected_forget edge.
std::map<std::string, int> forget_edge_distances(const KnowledgeGraph& graph) {
    std::map<std::string, std::vector<std::string>> by_node;
    for (const auto& [k, e] : graph.edges) {
        by_node[e.subject].push_back(k);
        by_node[e.object].push_back(k);
    }
    std::map<std::string, int> dist;
    std::deque<std::string> frontier;
    for (const auto& [k, e] : graph.edges)
        if (e.expected_forget) {
            dist[k] = 0;
            frontier.push_back(k);
        }
    while (!frontier.empty()) {
        auto k = frontier.front();
        frontier.pop_front();
        const auto& e = graph.edges.at(k);
        for (const auto& node : {e.subject, e.object})
            for (const auto& nk : by_node[node]) {
                if (dist.count(nk)) continue;
                dist[nk] = dist[k] + 1;
                frontier.push_back(nk);
            }
    }
    return dist;
}

// Single-edge probe oriented away from seed entities: asks for the object
// unless the object is a seed, then flips; both-seed edges are skipped.
std::optional<Probe> retention_probe(const KnowledgeGraph& graph, const FactTriplet& e,
                                     ProbeKind kind) {
    bool invert = graph.is_seed_id(e.object);
    if (invert && graph.is_seed_id(e.subject)) return std::nullopt;
    ChainHop hop{e.key(), e.relation, invert,
                 invert ? e.object : e.subject,
                 invert ? e.subject : e.object};
    return probe_from_chain(graph, {hop}, kind);
}

}  // namespace

std::vector<Probe> gen_single_hop(const KnowledgeGraph& graph) {
    std::vector<Probe> out;
    for (const auto& [k, e] : graph.edges) {
        if (!e.expected_forget) continue;
        ChainHop hop{k, e.relation, false, e.subject, e.object};
        out.push_back(probe_from_chain(graph, {hop}, ProbeKind::forget_1hop));
    }
    if (out.empty())
        throw std::invalid_argument("gen_single_hop: graph has no expected_forget edges");
    return out;
}

std::vector<Probe> gen_multi_hop(const KnowledgeGraph& graph, int n) {
    if (n != 2 && n != 3) throw std::invalid_argument("gen_multi_hop: n must be 2 or 3");
    std::set<std::string> targets;
    for (const auto& [k, e] : graph.edges)
        if (e.expected_forget) {
            targets.insert(e.subject);
            targets.insert(e.object);
        }
    ProbeKind kind = n == 2 ? ProbeKind::forget_2hop : ProbeKind::forget_3hop;
    std::vector<Probe> out;
    std::set<std::string> seen_ids;
    for (const auto& target : targets)
        for (const auto& chain : paths_from_seed(graph, target, n)) {
            Probe p = probe_from_chain(graph, chain, kind);
            if (seen_ids.insert(p.id).second) out.push_back(std::move(p));
        }
    return out;
}

std::optional<Probe> perturb_alias(const KnowledgeGraph& graph, const Probe& probe) {
    auto spec = questions::parse(probe.question);
    if (!spec) return std::nullopt;

    auto base_norm = text::normalize_name(spec->base_entity);
    const EntityNode* node = nullptr;
    for (const auto& [_, n] : graph.nodes)
        for (const auto& a : n.aliases)
            if (text::normalize_name(a) == base_norm) node = &n;
    if (!node) return std::nullopt;

    std::optional<std::string> replacement;
    for (const auto& a : sorted_aliases(*node))
        if (text::normalize_name(a) != text::normalize_name(node->canonical_name) &&
            text::normalize_name(a) != base_norm) {
            replacement = a;
            break;
        }
    if (!replacement) return std::nullopt;

    Probe out = probe;
    spec->base_entity = *replacement;
    out.kind = ProbeKind::forget_alias;
    out.question = questions::render(*spec);
    out.id = probe_id_for(out.question);
    out.prefilter_passed = false;
    return out;
}

Probe decompose(const Probe& probe) {
    if (probe.kind != ProbeKind::forget_2hop && probe.kind != ProbeKind::forget_3hop)
        throw std::invalid_argument("decompose: probe kind must be forget_2hop or forget_3hop, got " +
                                    to_string(probe.kind));
    Probe out = probe;
    out.kind = ProbeKind::forget_decomposed;
    out.question = templates::decompose().render({{"question", probe.question}});
    out.id = probe_id_for(out.question);
    out.prefilter_passed = false;
    return out;
}

std::vector<Probe> gen_retention(const KnowledgeGraph& graph, RetentionOptions opts) {
    auto dist = forget_edge_distances(graph);
    std::vector<Probe> out;
    std::set<std::string> seen_ids;
    auto push = [&](std::optional<Probe> p) {
        if (p && seen_ids.insert(p->id).second) out.push_back(std::move(*p));
    };

    for (const auto& [k, e] : graph.edges) {
        auto it = dist.find(k);
        if (it == dist.end() || it->second == 0) continue;
        if (it->second == 1) push(retention_probe(graph, e, ProbeKind::retain_1away));
        if (it->second == 2) push(retention_probe(graph, e, ProbeKind::retain_2away));
    }

    // Relationship retention draws from the most frequent relation labels,
    // restricted to edges far enough from the forget set that their questions
    // cannot collide with the 1-away/2-away suites.
    std::map<std::string, int> freq;
    for (const auto& [k, e] : graph.edges) ++freq[e.relation];
    std::vector<std::pair<int, std::string>> ranked;
    for (const auto& [rel, n] : freq) ranked.push_back({-n, rel});
    std::sort(ranked.begin(), ranked.end());
    std::set<std::string> top;
    for (size_t i = 0; i < ranked.size() && static_cast<int>(i) < opts.top_relations; ++i)
        top.insert(ranked[i].second);

    for (const auto& [k, e] : graph.edges) {
        if (!top.count(e.relation)) continue;
        auto it = dist.find(k);
        if (it != dist.end() && it->second < 3) continue;
        push(retention_probe(graph, e, ProbeKind::retain_relation));
    }
    return out;
}

PrefilterResult prefilter(ModelEndpoint& target, std::vector<Probe> probes) {
    PrefilterResult res;
    size_t i = 0;
    try {
        for (; i < probes.size(); ++i) {
            std::string raw = target.complete(probes[i].question);
            probes[i].prefilter_passed = grade(probes[i].expected, raw).correct;
            if (probes[i].prefilter_passed) ++res.passed;
        }
    } catch (const CompletionError& e) {
        if (e.code != CompletionErrorCode::budget_exhausted) throw;
        res.partial = true;
        for (; i < probes.size(); ++i) probes[i].prefilter_passed = false;
    }
    res.probes = std::move(probes);
    return res;
}

SampleResult sample(const std::vector<Probe>& probes, int per_kind, uint64_t seed) {
    if (per_kind < 1) throw std::invalid_argument("sample: per_kind must be >= 1");
    std::map<ProbeKind, std::vector<const Probe*>> by_kind;
    for (const auto& p : probes)
        if (p.prefilter_passed) by_kind[p.kind].push_back(&p);

    SampleResult res;
    for (ProbeKind kind : all_probe_kinds()) {
        auto& pool = by_kind[kind];
        std::sort(pool.begin(), pool.end(),
                  [](const Probe* a, const Probe* b) { return a->id < b->id; });
        std::mt19937_64 rng(seed ^ text::fnv1a64(to_string(kind)));
        int take = std::min<int>(per_kind, static_cast<int>(pool.size()));
        // Partial Fisher-Yates; std::sample is not seed-stable across libraries.
        for (int i = 0; i < take; ++i) {
            size_t j = i + static_cast<size_t>(rng() % (pool.size() - i));
            std::swap(pool[i], pool[j]);
            res.probes.push_back(*pool[i]);
        }
        if (take < per_kind) res.shortfall[to_string(kind)] = per_kind - take;
    }
    return res;
}

std::optional<std::string> replay_path(const KnowledgeGraph& graph, const Probe& probe) {
    if (probe.path.empty()) return std::nullopt;
    std::string at = probe.path.front().from;
    if (!graph.has_node(at)) return std::nullopt;
    for (const auto& hop : probe.path) {
        auto it = graph.edges.find(hop.edge_key);
        if (it == graph.edges.end()) return std::nullopt;
        const FactTriplet& e = it->second;
        const std::string& from = hop.inverted ? e.object : e.subject;
        const std::string& to = hop.inverted ? e.subject : e.object;
        if (e.relation != hop.relation || from != hop.from || to != hop.to) return std::nullopt;
        if (from != at) return std::nullopt;
        at = to;
    }
    if (!graph.has_node(at)) return std::nullopt;
    return graph.node(at).canonical_name;
}

nlohmann::json Manifest::to_json() const {
    return {{"graph_hash", graph_hash},
            {"kinds", kinds},
            {"sample_seed", sample_seed},
            {"per_kind", per_kind},
            {"shortfall", shortfall},
            {"prefilter_partial", prefilter_partial}};
}

Manifest Manifest::from_json(const nlohmann::json& j) {
    Manifest m;
    m.graph_hash = j.at("graph_hash").get<std::string>();
    m.kinds = j.at("kinds").get<std::map<std::string, std::vector<std::string>>>();
    m.sample_seed = j.at("sample_seed").get<uint64_t>();
    m.per_kind = j.at("per_kind").get<int>();
    m.shortfall = j.value("shortfall", std::map<std::string, int>{});
    m.prefilter_partial = j.value("prefilter_partial", false);
    return m;
}

Manifest build_manifest(const KnowledgeGraph& graph, const SampleResult& sampled,
                        uint64_t sample_seed, int per_kind, bool prefilter_partial) {
    Manifest m;
    m.graph_hash = graph.content_hash();
    m.sample_seed = sample_seed;
    m.per_kind = per_kind;
    m.shortfall = sampled.shortfall;
    m.prefilter_partial = prefilter_partial;
    for (const auto& p : sampled.probes) m.kinds[to_string(p.kind)].push_back(p.id);
    return m;
}

std::string probes_to_jsonl(const std::vector<Probe>& probes) {
    std::ostringstream out;
    for (const auto& p : probes) out << p.to_json().dump() << "\n";
    return out.str();
}

std::vector<Probe> probes_from_jsonl(const std::string& body) {
    std::vector<Probe> out;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line);
        if (!j.contains("id")) continue;  // pipeline header line
        out.push_back(Probe::from_json(j));
    }
    return out;
}

}  // namespace kgprobe
