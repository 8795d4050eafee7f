#include "kgprobe/builder.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iostream>
#include <sstream>

#include "kgprobe/text.hpp"

namespace kgprobe {

namespace {

bool looks_like_refusal(const std::string& s) {
    auto t = text::lower(text::trim(s));
    return t.empty() || t.find("don't have information") != std::string::npos ||
           t.find("do not have information") != std::string::npos;
}

std::string answer_prompt(const std::string& entity, const std::string& questions) {
    return "Answer each of the following questions about '" + entity +
           "' with full sentences that name the entities involved.\n" + questions;
}

bool yes_reply(const std::string& s) {
    return text::lower(text::trim(s)).rfind("yes", 0) == 0;
}

std::string clean_surface(const std::string& s) { return text::collapse_ws(text::trim(s)); }

std::optional<int> score_edge(ModelEndpoint& endpoint, const std::string& seed,
                              const std::string& subject, const std::string& relation,
                              const std::string& object) {
    std::string prompt = templates::relevance().render({{"Seed Entity", seed},
                                                        {"entity", subject},
                                                        {"relation", relation},
                                                        {"obj", object}});
    return parse_relevance(endpoint.complete(prompt));
}

bool judge_forget(ModelEndpoint& endpoint, const std::string& seed, const std::string& subject,
                  const std::string& relation, const std::string& object) {
    std::string prompt = templates::judge().render(
        {{"seed", seed}, {"subject", subject}, {"relation", relation}, {"object", object}});
    return yes_reply(endpoint.complete(prompt));
}

bool alias_candidates(const std::string& a, const std::string& b) {
    if (text::jaro_winkler(text::normalize_name(a), text::normalize_name(b)) >= 0.85) return true;
    auto ta = text::split_tokens(text::normalize_name(a));
    auto tb = text::split_tokens(text::normalize_name(b));
    for (const auto& x : ta)
        if (std::find(tb.begin(), tb.end(), x) != tb.end()) return true;
    return false;
}

void prune_and_redepth(KnowledgeGraph& g) {
    auto dist = g.seed_distances();
    for (auto it = g.edges.begin(); it != g.edges.end();) {
        if (!dist.count(it->second.subject) || !dist.count(it->second.object))
            it = g.edges.erase(it);
        else
            ++it;
    }
    for (auto it = g.nodes.begin(); it != g.nodes.end();) {
        auto d = dist.find(it->first);
        if (d == dist.end() && !it->second.is_seed) {
            it = g.nodes.erase(it);
        } else {
            it->second.depth = d == dist.end() ? 0 : d->second;
            ++it;
        }
    }
}

// Merges node `loser` into `keeper`, redirecting edges and absorbing aliases
// that no other node owns.
void merge_nodes(KnowledgeGraph& g, const std::string& keeper, const std::string& loser) {
    std::set<std::string> taken;
    for (const auto& [id, n] : g.nodes)
        if (id != loser)
            for (const auto& a : n.aliases) taken.insert(text::normalize_name(a));

    EntityNode& keep = g.nodes.at(keeper);
    const EntityNode& lose = g.nodes.at(loser);
    for (const auto& a : lose.aliases)
        if (!taken.count(text::normalize_name(a))) keep.aliases.insert(a);
    keep.relevance = std::max(keep.relevance, lose.relevance);

    std::vector<FactTriplet> redirected;
    for (auto it = g.edges.begin(); it != g.edges.end();) {
        FactTriplet e = it->second;
        if (e.subject == loser || e.object == loser) {
            if (e.subject == loser) e.subject = keeper;
            if (e.object == loser) e.object = keeper;
            it = g.edges.erase(it);
            redirected.push_back(std::move(e));
        } else {
            ++it;
        }
    }
    for (auto& e : redirected) g.add_edge(std::move(e));

    g.seeds.erase(std::remove(g.seeds.begin(), g.seeds.end(), loser), g.seeds.end());
    g.nodes.erase(loser);
}

KnowledgeGraph resolve_aliases_ordered(ModelEndpoint& endpoint, KnowledgeGraph g,
                                       std::vector<std::string> order, BuildDiagnostics* diag,
                                       bool* truncated) {
    for (size_t i = 0; i < order.size(); ++i) {
        if (!g.has_node(order[i])) continue;
        for (size_t j = i + 1; j < order.size(); ++j) {
            if (!g.has_node(order[i]) || !g.has_node(order[j])) continue;
            const std::string a = g.node(order[i]).canonical_name;
            const std::string b = g.node(order[j]).canonical_name;
            if (text::normalize_name(a) == text::normalize_name(b)) continue;
            if (!alias_candidates(a, b)) continue;
            std::string prompt =
                templates::alias().render({{"node", b}, {"visited_node", a}});
            std::string verdict;
            try {
                verdict = endpoint.complete(prompt);
            } catch (const CompletionError& e) {
                if (e.code != CompletionErrorCode::budget_exhausted) throw;
                if (truncated) *truncated = true;
                return g;
            }
            if (diag) ++diag->alias_calls;
            if (yes_reply(verdict)) {
                merge_nodes(g, order[i], order[j]);
                if (diag) ++diag->alias_merges;
            }
        }
    }
    return g;
}

}  // namespace

std::string elicit(ModelEndpoint& endpoint, const std::string& entity_name) {
    std::string questions =
        endpoint.complete(templates::elicit().render({{"entity", entity_name}}));
    if (looks_like_refusal(questions)) return questions;
    return endpoint.complete(answer_prompt(entity_name, questions));
}

std::vector<TripletDraft> parse_triplet_lines(const std::string& raw) {
    std::vector<TripletDraft> out;
    std::istringstream in(raw);
    std::string line;
    while (std::getline(in, line)) {
        size_t open = line.find('(');
        size_t close = line.rfind(')');
        if (open == std::string::npos || close == std::string::npos || close <= open) continue;
        std::string body = line.substr(open + 1, close - open - 1);

        // Split on top-level commas, respecting double quotes.
        std::vector<std::string> parts{""};
        bool in_quotes = false;
        for (char c : body) {
            if (c == '"') {
                in_quotes = !in_quotes;
                continue;
            }
            if (c == ',' && !in_quotes) {
                parts.emplace_back();
                continue;
            }
            parts.back().push_back(c);
        }
        if (parts.size() != 3) continue;
        TripletDraft d{clean_surface(parts[0]), text::normalize_relation(parts[1]),
                       clean_surface(parts[2])};
        if (d.subject.empty() || d.relation.empty() || d.object.empty()) continue;
        if (text::normalize_name(d.subject) == text::normalize_name(d.object)) continue;
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<TripletDraft> extract_triplets(ModelEndpoint& endpoint,
                                           const std::string& elicited_text) {
    if (text::trim(elicited_text).empty()) return {};
    std::string raw = endpoint.complete(
        templates::extract_triplets().render({{"text", elicited_text}}));
    auto drafts = parse_triplet_lines(raw);
    if (drafts.empty())
        std::cerr << "warning: no parseable triples in extraction output\n";
    return drafts;
}

KnowledgeGraph expand(ModelEndpoint& endpoint, const std::vector<std::string>& seeds,
                      const ExpansionBudget& budget, std::ostream* log,
                      BuildDiagnostics* diag) {
    budget.validate();
    if (seeds.empty()) throw std::invalid_argument("expand: no seed entities");

    KnowledgeGraph g;
    g.budget = budget;
    const int node_cap = static_cast<int>(std::ceil(budget.n_total()));
    const int call_cap = static_cast<int>(std::ceil(budget.a_total()));
    const int start_calls = endpoint.calls_used();
    const auto saved_budget = endpoint.options().call_budget;
    int hard_cap = start_calls + call_cap;
    if (saved_budget) hard_cap = std::min(hard_cap, *saved_budget);
    endpoint.set_call_budget(hard_cap);
    struct BudgetRestore {
        ModelEndpoint& ep;
        std::optional<int> saved;
        ~BudgetRestore() { ep.set_call_budget(saved); }
    } restore{endpoint, saved_budget};

    std::map<std::string, std::string> by_name;       // normalized name -> node id
    std::map<std::string, int> discovery;             // node id -> discovery index
    std::map<std::string, std::string> root;          // node id -> root seed canonical
    std::vector<std::pair<std::string, int>> frontier;  // (node id, depth), discovery order
    int next_discovery = 0;
    int non_seed_count = 0;
    int failed_seeds = 0;

    auto new_node = [&](const std::string& name, int depth, int relevance, bool is_seed,
                        const std::string& root_seed) {
        EntityNode n;
        n.canonical_name = clean_surface(name);
        n.id = entity_id(n.canonical_name);
        n.aliases = {n.canonical_name};
        n.depth = depth;
        n.relevance = relevance;
        n.is_seed = is_seed;
        by_name[text::normalize_name(name)] = n.id;
        discovery[n.id] = next_discovery++;
        root[n.id] = root_seed.empty() ? n.canonical_name : root_seed;
        std::string id = n.id;
        g.nodes.emplace(id, std::move(n));
        if (!is_seed) ++non_seed_count;
        return id;
    };

    for (const auto& s : seeds) {
        if (by_name.count(text::normalize_name(s))) continue;
        g.seeds.push_back(new_node(s, 0, 10, true, ""));
        frontier.emplace_back(g.seeds.back(), 0);
    }

    struct CandidateEdge {
        TripletDraft draft;
        int score;
        bool forget;
        std::string provenance;
        std::string root_seed;
        int order;  // discovery order of appearance within the level
    };

    auto finalize = [&]() {
        // End-of-build relevance pass over canonical names; mostly cache hits.
        try {
            for (auto it = g.edges.begin(); it != g.edges.end();) {
                FactTriplet& e = it->second;
                const std::string& seed = root.count(e.subject) ? root[e.subject]
                                                                : g.node(e.subject).canonical_name;
                auto score = score_edge(endpoint, seed, g.node(e.subject).canonical_name,
                                        e.relation, g.node(e.object).canonical_name);
                if (!score || *score < budget.relevance_threshold) {
                    if (!score && diag) ++diag->relevance_unparseable;
                    if (score && diag) ++diag->edges_filtered;
                    it = g.edges.erase(it);
                    continue;
                }
                e.expected_forget = judge_forget(endpoint, seed, g.node(e.subject).canonical_name,
                                                 e.relation, g.node(e.object).canonical_name);
                ++it;
            }
            std::vector<std::string> order;
            for (const auto& [id, idx] : discovery)
                if (g.has_node(id)) order.push_back(id);
            std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
                return discovery.at(a) < discovery.at(b);
            });
            bool trunc = false;
            g = resolve_aliases_ordered(endpoint, std::move(g), std::move(order), diag, &trunc);
            if (trunc) g.truncated = true;
        } catch (const CompletionError& e) {
            if (e.code != CompletionErrorCode::budget_exhausted) throw;
            g.truncated = true;
        }
        prune_and_redepth(g);
        g.calls_used = endpoint.calls_used() - start_calls;
    };

    for (int depth = 0; depth <= budget.d_max; ++depth) {
        std::vector<std::string> level;
        for (const auto& [id, d] : frontier)
            if (d == depth && g.has_node(id)) level.push_back(id);
        if (level.empty()) break;

        std::vector<CandidateEdge> candidates;
        int order_counter = 0;
        bool exhausted = false;
        for (const auto& id : level) {
            const std::string name = g.node(id).canonical_name;
            try {
                std::string txt = elicit(endpoint, name);
                if (looks_like_refusal(txt)) {
                    if (g.is_seed_id(id)) {
                        ++failed_seeds;
                        std::cerr << "warning: seed entity unknown to model: " << name << "\n";
                        if (failed_seeds == static_cast<int>(g.seeds.size()))
                            throw std::runtime_error(
                                "expand: elicitation refused for every seed, last was: " + name);
                    }
                    continue;
                }
                std::string prov = text::fnv1a64_hex(txt);
                for (auto& d : extract_triplets(endpoint, txt)) {
                    const std::string& seed = root[id];
                    auto score = score_edge(endpoint, seed, d.subject, d.relation, d.object);
                    if (!score) {
                        if (diag) ++diag->relevance_unparseable;
                        continue;
                    }
                    if (*score < budget.relevance_threshold) {
                        if (diag) ++diag->edges_filtered;
                        continue;
                    }
                    bool forget = judge_forget(endpoint, seed, d.subject, d.relation, d.object);
                    candidates.push_back(
                        {std::move(d), *score, forget, prov, seed, order_counter++});
                }
            } catch (const CompletionError& e) {
                if (e.code != CompletionErrorCode::budget_exhausted) throw;
                exhausted = true;
                break;
            }
        }

        // Ranked admission of newly discovered names: highest relevance first,
        // ties by order of appearance, capped by the level width.
        struct NewName {
            std::string name;
            int best_score = -1;
            int first_order = 0;
            std::string root_seed;
        };
        std::map<std::string, NewName> fresh;  // keyed by normalized name
        for (const auto& c : candidates)
            for (const std::string* side : {&c.draft.subject, &c.draft.object}) {
                auto norm = text::normalize_name(*side);
                if (by_name.count(norm)) continue;
                auto [it, inserted] = fresh.try_emplace(norm);
                if (inserted) {
                    it->second.name = *side;
                    it->second.first_order = c.order;
                    it->second.root_seed = c.root_seed;
                }
                it->second.best_score = std::max(it->second.best_score, c.score);
            }
        std::vector<const NewName*> ranked;
        for (const auto& [_, n] : fresh) ranked.push_back(&n);
        std::sort(ranked.begin(), ranked.end(), [](const NewName* a, const NewName* b) {
            if (a->best_score != b->best_score) return a->best_score > b->best_score;
            return a->first_order < b->first_order;
        });
        int admitted = 0;
        const int level_cap = budget.level_width(depth);
        for (const NewName* n : ranked) {
            if (admitted >= level_cap || non_seed_count >= node_cap) break;
            std::string id = new_node(n->name, depth + 1, n->best_score, false, n->root_seed);
            frontier.emplace_back(id, depth + 1);
            ++admitted;
        }

        for (const auto& c : candidates) {
            auto si = by_name.find(text::normalize_name(c.draft.subject));
            auto oi = by_name.find(text::normalize_name(c.draft.object));
            if (si == by_name.end() || oi == by_name.end()) continue;
            const EntityNode& sn = g.node(si->second);
            const EntityNode& on = g.node(oi->second);
            // Reject shortcuts that would falsify recorded BFS depths.
            if (std::abs(sn.depth - on.depth) > 1) continue;
            g.nodes.at(sn.id).relevance = std::max(sn.relevance, c.score);
            g.nodes.at(on.id).relevance = std::max(on.relevance, c.score);
            g.add_edge({sn.id, c.draft.relation, on.id, c.forget, c.provenance});
        }

        if (log)
            *log << "frontier depth=" << depth << " nodes=" << g.nodes.size()
                 << " calls=" << endpoint.calls_used() - start_calls << "/" << call_cap << "\n";
        if (exhausted) {
            g.truncated = true;
            break;
        }
    }

    finalize();
    return g;
}

KnowledgeGraph filter_relevance(ModelEndpoint& endpoint, KnowledgeGraph graph,
                                const std::string& seed_name, int threshold,
                                BuildDiagnostics* diag) {
    for (auto it = graph.edges.begin(); it != graph.edges.end();) {
        FactTriplet& e = it->second;
        const std::string subj = graph.node(e.subject).canonical_name;
        const std::string obj = graph.node(e.object).canonical_name;
        auto score = score_edge(endpoint, seed_name, subj, e.relation, obj);
        if (!score || *score < threshold) {
            if (diag) {
                if (!score)
                    ++diag->relevance_unparseable;
                else
                    ++diag->edges_filtered;
            }
            it = graph.edges.erase(it);
            continue;
        }
        e.expected_forget = judge_forget(endpoint, seed_name, subj, e.relation, obj);
        ++it;
    }
    prune_and_redepth(graph);
    return graph;
}

KnowledgeGraph resolve_aliases(ModelEndpoint& endpoint, KnowledgeGraph graph,
                               BuildDiagnostics* diag) {
    std::vector<std::string> order;
    for (const auto& [id, _] : graph.nodes) order.push_back(id);
    std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
        const EntityNode& na = graph.node(a);
        const EntityNode& nb = graph.node(b);
        if (na.depth != nb.depth) return na.depth < nb.depth;
        return na.canonical_name < nb.canonical_name;
    });
    bool trunc = false;
    auto out = resolve_aliases_ordered(endpoint, std::move(graph), std::move(order), diag, &trunc);
    if (trunc) out.truncated = true;
    return out;
}

}  // namespace kgprobe
