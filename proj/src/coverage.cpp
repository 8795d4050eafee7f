#include "kgprobe/coverage.hpp"

#include <algorithm>
#include <iostream>
#include <sstream>

#include "kgprobe/text.hpp"

namespace kgprobe {

nlohmann::json BenchmarkProbe::to_json() const {
    return {{"source", source},
            {"question", question},
            {"answers", answers},
            {"open_ended", open_ended}};
}

BenchmarkProbe BenchmarkProbe::from_json(const nlohmann::json& j) {
    BenchmarkProbe p;
    p.source = j.value("source", "");
    p.question = j.at("question").get<std::string>();
    p.answers = j.at("answers").get<std::vector<std::string>>();
    p.open_ended = j.value("open_ended", false);
    if (p.answers.empty())
        throw std::invalid_argument("benchmark probe with no answers: " + p.question);
    return p;
}

std::vector<BenchmarkProbe> benchmark_from_jsonl(const std::string& body) {
    std::vector<BenchmarkProbe> out;
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        out.push_back(BenchmarkProbe::from_json(nlohmann::json::parse(line)));
    }
    return out;
}

std::string extract_key_prompt(const std::string& question) {
    return "Extract the key entity and relation from the benchmark probe below. "
           "Reply with exactly one line of the form: entity | relation. "
           "If the probe has no single clear entity and relation, reply UNPARSEABLE.\n"
           "Question: \"" +
           question + "\"";
}

std::optional<std::pair<std::string, std::string>> extract_key(ModelEndpoint& endpoint,
                                                               const BenchmarkProbe& probe) {
    std::string reply = text::trim(endpoint.complete(extract_key_prompt(probe.question)));
    if (reply.empty() || reply.find("UNPARSEABLE") != std::string::npos) return std::nullopt;
    // First reply line only; extractors sometimes append commentary.
    auto nl = reply.find('\n');
    if (nl != std::string::npos) reply = reply.substr(0, nl);
    auto bar = reply.find('|');
    if (bar == std::string::npos) return std::nullopt;
    std::string entity = text::normalize_name(reply.substr(0, bar));
    std::string relation = text::normalize_relation(reply.substr(bar + 1));
    if (entity.empty() || relation.empty()) return std::nullopt;
    return std::make_pair(entity, relation);
}

namespace {

bool node_matches(const EntityNode& node, const std::string& normalized_name) {
    for (const auto& a : node.aliases)
        if (text::normalize_name(a) == normalized_name) return true;
    return false;
}

bool relation_matches(const std::string& a, const std::string& b, const SynonymTable* synonyms) {
    if (a == b) return true;
    if (!synonyms) return false;
    for (const auto& [_, group] : *synonyms)
        if (group.count(a) && group.count(b)) return true;
    auto ia = synonyms->find(a);
    if (ia != synonyms->end() && ia->second.count(b)) return true;
    auto ib = synonyms->find(b);
    return ib != synonyms->end() && ib->second.count(a);
}

}  // namespace

bool is_covered(const KnowledgeGraph& graph, const std::string& entity,
                const std::string& relation, const std::vector<std::string>& answers,
                bool open_ended, const SynonymTable* synonyms) {
    (void)open_ended;  // any single acceptable answer suffices in both modes
    std::string ne = text::normalize_name(entity);
    std::string nr = text::normalize_relation(relation);
    std::vector<std::string> na;
    na.reserve(answers.size());
    for (const auto& a : answers) na.push_back(text::normalize_name(a));

    for (const auto& [_, edge] : graph.edges) {
        if (!relation_matches(edge.relation, nr, synonyms)) continue;
        const EntityNode& subj = graph.node(edge.subject);
        const EntityNode& obj = graph.node(edge.object);
        auto side_matches = [&](const EntityNode& ent, const EntityNode& other) {
            if (!node_matches(ent, ne)) return false;
            return std::any_of(na.begin(), na.end(),
                               [&](const std::string& a) { return node_matches(other, a); });
        };
        if (side_matches(subj, obj) || side_matches(obj, subj)) return true;
    }
    return false;
}

nlohmann::json CoverageReport::to_json() const {
    return {{"total", total},
            {"matched", matched},
            {"unmatched", unmatched},
            {"unmatchable", unmatchable},
            {"coverage", coverage}};
}

CoverageReport measure_coverage(const KnowledgeGraph& graph, ModelEndpoint& extractor,
                                const std::vector<BenchmarkProbe>& benchmark,
                                const SynonymTable* synonyms) {
    CoverageReport rep;
    rep.total = static_cast<int>(benchmark.size());
    for (const auto& probe : benchmark) {
        auto key = extract_key(extractor, probe);
        if (!key) {
            ++rep.unmatchable;
            continue;
        }
        if (is_covered(graph, key->first, key->second, probe.answers, probe.open_ended, synonyms))
            ++rep.matched;
        else
            ++rep.unmatched;
    }
    rep.coverage = rep.total == 0 ? 0.0 : static_cast<double>(rep.matched) / rep.total;
    return rep;
}

std::vector<CurvePoint> coverage_curve(const std::vector<KnowledgeGraph>& graphs_by_budget,
                                       ModelEndpoint& extractor,
                                       const std::vector<BenchmarkProbe>& benchmark,
                                       const SynonymTable* synonyms) {
    for (size_t i = 1; i < graphs_by_budget.size(); ++i) {
        const auto& prev = graphs_by_budget[i - 1];
        const auto& cur = graphs_by_budget[i];
        bool nested = true;
        for (const auto& [id, _] : prev.nodes)
            if (!cur.has_node(id)) nested = false;
        for (const auto& [key, _] : prev.edges)
            if (!cur.edges.count(key)) nested = false;
        if (!nested)
            std::cerr << "coverage_curve: graph " << i - 1 << " is not a subset of graph " << i
                      << "; curve may not be monotone\n";
    }
    std::vector<CurvePoint> curve;
    for (const auto& g : graphs_by_budget) {
        auto rep = measure_coverage(g, extractor, benchmark, synonyms);
        curve.push_back({static_cast<int>(g.nodes.size()), rep.coverage});
    }
    return curve;
}

}  // namespace kgprobe
