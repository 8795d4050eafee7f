// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Each criterion re-derives its expectations from first principles
// (series sums, forward-walk enumeration, explicit world replay) rather than
// reusing the library code paths it is checking.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "kgprobe/builder.hpp"
#include "kgprobe/coverage.hpp"
#include "kgprobe/graph.hpp"
#include "kgprobe/pipeline.hpp"
#include "kgprobe/probes.hpp"
#include "kgprobe/questions.hpp"
#include "kgprobe/scorer.hpp"
#include "kgprobe/text.hpp"
#include "kgprobe/world.hpp"
#include "published_tables.hpp"

using namespace kgprobe;
namespace fs = std::filesystem;

namespace {

int g_failures = 0;

void report(int n, const std::string& label, bool ok, const std::string& why = "") {
    std::cout << "criterion " << n << " (" << label << "): " << (ok ? "PASS" : "FAIL");
    if (!ok && !why.empty()) std::cout << " - " << why;
    std::cout << "\n";
    if (!ok) ++g_failures;
}

// ---------------------------------------------------------------------------
// Shared world oracles (same derivations as the unit suites).

std::string world_canon(const WorldSpec& w, const std::string& name) {
    auto n = text::normalize_name(name);
    for (const auto& [canon, group] : w.aliases)
        for (const auto& a : group)
            if (text::normalize_name(a) == n) return text::normalize_name(canon);
    return n;
}

std::set<std::string> world_triples(const WorldSpec& w) {
    std::set<std::string> out;
    for (const auto& f : w.facts)
        out.insert(world_canon(w, f.subject) + "|" + f.relation + "|" + world_canon(w, f.object));
    return out;
}

std::map<std::string, int> world_bfs(const WorldSpec& w) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& f : w.facts) {
        auto s = world_canon(w, f.subject), o = world_canon(w, f.object);
        adj[s].insert(o);
        adj[o].insert(s);
    }
    std::map<std::string, int> dist;
    std::deque<std::string> q;
    for (const auto& s : w.seeds) {
        dist[world_canon(w, s)] = 0;
        q.push_back(world_canon(w, s));
    }
    while (!q.empty()) {
        auto cur = q.front();
        q.pop_front();
        for (const auto& n : adj[cur])
            if (!dist.count(n)) {
                dist[n] = dist[cur] + 1;
                q.push_back(n);
            }
    }
    return dist;
}

int world_diameter(const WorldSpec& w) {
    int far = 0;
    for (const auto& [_, d] : world_bfs(w)) far = std::max(far, d);
    return far;
}

ExpansionBudget generous_budget(const WorldSpec& w) {
    ExpansionBudget b;
    b.b0 = 20;
    b.alpha = 0.95;
    b.d_max = std::max(1, world_diameter(w));
    b.k = 8;
    return b;
}

std::shared_ptr<ModelEndpoint> world_endpoint(const WorldSpec& spec,
                                              std::optional<ForgettingProfile> profile = {}) {
    EndpointOptions opts;
    opts.retry_backoff_ms = 1;
    return ModelEndpoint::synthetic(std::make_shared<SyntheticWorld>(spec, std::move(profile)),
                                    opts);
}

// Full probe set for a graph, mirroring the pipeline's gen-probes stage.
std::vector<Probe> all_probes(const KnowledgeGraph& g) {
    std::vector<Probe> probes = gen_single_hop(g);
    auto two = gen_multi_hop(g, 2);
    auto three = gen_multi_hop(g, 3);
    for (const auto& p : two)
        if (auto a = perturb_alias(g, p)) probes.push_back(std::move(*a));
    for (const auto& p : two) probes.push_back(decompose(p));
    for (const auto& p : three) probes.push_back(decompose(p));
    probes.insert(probes.end(), two.begin(), two.end());
    probes.insert(probes.end(), three.begin(), three.end());
    for (auto& p : gen_retention(g, {5})) probes.push_back(std::move(p));
    return probes;
}

// Random graph shaped like the unit-suite generator: connected, mixed forget
// flags, node-simple ids "entity i".
KnowledgeGraph random_graph(std::mt19937_64& rng, int max_nodes) {
    static const std::vector<std::string> rels = {"knows", "wrote", "part of", "lives in"};
    int n = 4 + static_cast<int>(rng() % (max_nodes - 3));
    std::vector<std::tuple<int, int, std::string, bool>> edges;
    for (int i = 1; i < n; ++i)
        edges.emplace_back(static_cast<int>(rng() % i), i, "linked to", rng() % 10 < 3);
    int m = n + static_cast<int>(rng() % n);
    for (int j = 0; j < m; ++j) {
        int a = static_cast<int>(rng() % n);
        int b = static_cast<int>(rng() % n);
        if (a == b) continue;
        edges.emplace_back(a, b, rels[rng() % rels.size()], rng() % 10 < 3);
    }
    KnowledgeGraph g;
    g.budget = ExpansionBudget{10, 0.5, 3, 3};
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) {
        EntityNode node;
        node.canonical_name = "entity " + std::to_string(i);
        node.id = entity_id(node.canonical_name);
        node.aliases = {node.canonical_name};
        node.is_seed = i == 0;
        ids.push_back(node.id);
        g.nodes.emplace(node.id, std::move(node));
    }
    g.seeds = {ids[0]};
    for (const auto& [a, b, rel, forget] : edges)
        g.add_edge({ids[a], rel, ids[b], forget, "test"});
    auto dist = g.seed_distances();
    for (auto& [id, node] : g.nodes) node.depth = dist.count(id) ? dist[id] : 0;
    return g;
}

// Brute-force enumeration of forgettable chains, independent of the library.
std::vector<std::string> oracle_chain_keys(const KnowledgeGraph& g, const std::string& target,
                                           int length) {
    std::vector<std::string> keys;
    std::vector<std::pair<std::string, bool>> chain;
    std::set<std::string> seen;
    std::function<void(const std::string&, int)> dfs = [&](const std::string& at, int used) {
        if (used == length) {
            if (at == target) {
                std::string k;
                for (const auto& [ek, inv] : chain) {
                    k += ek;
                    k += inv ? "~" : "-";
                }
                keys.push_back(k);
            }
            return;
        }
        for (const auto& [k, e] : g.edges) {
            for (bool inv : {false, true}) {
                const std::string& from = inv ? e.object : e.subject;
                const std::string& to = inv ? e.subject : e.object;
                if (from != at || seen.count(to)) continue;
                if (used == length - 1 && !e.expected_forget) continue;
                seen.insert(to);
                chain.emplace_back(k, inv);
                dfs(to, used + 1);
                chain.pop_back();
                seen.erase(to);
            }
        }
    };
    for (const auto& [id, _] : g.nodes) {
        if (id == target) continue;
        seen = {id};
        dfs(id, 0);
    }
    std::sort(keys.begin(), keys.end());
    return keys;
}

std::string chain_key(const TripletChain& c) {
    std::string k;
    for (const auto& h : c) {
        k += h.edge_key;
        k += h.inverted ? "~" : "-";
    }
    return k;
}

// ---------------------------------------------------------------------------
// Criteria.

void criterion_budget_formulas() {
    std::string why;
    int points = 0;
    for (int b0 : {1, 2, 5, 10, 25, 57})
        for (double alpha : {0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95})
            for (int d_max : {0, 1, 2, 3, 4})
                for (int k : {1, 2, 3}) {
                    ExpansionBudget b{b0, alpha, d_max, k};
                    // Series sum by explicit accumulation, no closed form.
                    double n = 0.0, pow = 1.0;
                    for (int i = 0; i <= d_max; ++i) {
                        n += b0 * pow;
                        pow *= alpha;
                    }
                    if (std::fabs(b.n_total() - n) > 1e-9 ||
                        std::fabs(b.a_total() - k * n) > 1e-9) {
                        why = "series mismatch at b0=" + std::to_string(b0);
                        break;
                    }
                    double p = 1.0;
                    for (int i = 0; i <= d_max; ++i) {
                        int want = std::max(1, static_cast<int>(std::floor(b0 * p)));
                        if (b.level_width(i) != want) why = "level width mismatch";
                        p *= alpha;
                    }
                    ++points;
                }
    ExpansionBudget anchor{10, 0.5, 2, 3};
    if (std::fabs(anchor.n_total() - 17.5) > 1e-9 || std::fabs(anchor.a_total() - 52.5) > 1e-9)
        why = "anchor (10, 0.5, 2, 3) does not give (17.5, 52.5)";
    if (points < 200) why = "grid too small: " + std::to_string(points);
    report(1, "budget closed forms vs series oracle on a " + std::to_string(points) +
                  "-point grid",
           why.empty(), why);
}

void criterion_published_tables() {
    std::string why;
    int rows = 0;
    for (const auto& table : tables::kPublishedTables)
        for (const auto& row : table) {
            auto s = scores_from_percent_accuracies(row.acc);
            if (std::fabs(s.forget - row.forget) > row.tol_forget ||
                std::fabs(s.retain - row.retain) > row.tol_retain ||
                std::fabs(s.overall - row.overall) > row.tol_overall)
                why = std::string("row ") + row.name + " outside tolerance";
            ++rows;
        }
    if (rows != 52) why = "expected 52 rows, saw " + std::to_string(rows);
    // Spot anchors quoted with the criterion.
    auto target = scores_from_percent_accuracies({98.6, 97.2, 84.1, 98.9, 98.1, 99.1});
    auto uld = scores_from_percent_accuracies({11.2, 18.7, 28.1, 74.2, 78.8, 86.1});
    if (std::fabs(target.forget - 93.3) > 0.1 || std::fabs(target.retain - 98.7) > 0.1 ||
        std::fabs(target.overall - 12.5) > 0.1)
        why = "Target anchor off";
    if (std::fabs(uld.forget - 19.3) > 0.1 || std::fabs(uld.retain - 79.7) > 0.1 ||
        std::fabs(uld.overall - 80.2) > 0.1)
        why = "ULD anchor off";
    report(2, "52 published table rows reconstructed from accuracy columns", why.empty(), why);
}

void criterion_rank_correlation() {
    double rho = spearman(tables::kForgetStatic, tables::kForgetMultihop);
    bool ok = std::fabs(rho - 0.87) <= 0.011;
    report(3, "rank correlation of forget columns = 0.87 +/- 0.01",
           ok, ok ? "" : "rho = " + std::to_string(rho));
}

void criterion_synthetic_oracle() {
    auto t0 = std::chrono::steady_clock::now();
    std::string why;

    // Pooled tallies across worlds: forget hop accuracies under the brittle
    // profile, near/far retention under the collateral profile.
    std::map<std::string, std::pair<int, int>> brittle_pool, collateral_pool;

    for (uint64_t seed = 0; seed < 20 && why.empty(); ++seed) {
        auto spec = random_world(seed, 14);
        auto target = world_endpoint(spec);
        KnowledgeGraph g = expand(*target, spec.seeds, generous_budget(spec));
        auto res = prefilter(*target, all_probes(g));
        std::vector<Probe> passed;
        for (auto& p : res.probes)
            if (p.prefilter_passed) passed.push_back(std::move(p));
        auto sampled = sample(passed, 6, 99);
        Manifest manifest = build_manifest(g, sampled, 99, 6, false);

        std::string seed_name = world_canon(spec, spec.seeds.front());
        std::vector<std::pair<std::string, ForgettingProfile>> profiles;
        {
            ForgettingProfile p;
            p.forget_entities = {seed_name};
            profiles.emplace_back("none", p);
            p.p_block_by_hops = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
            profiles.emplace_back("full", p);
            ForgettingProfile brittle;
            brittle.forget_entities = {seed_name};
            brittle.p_block_by_hops = {{1, 1.0}, {2, 0.5}, {3, 0.0}};
            brittle.rng_seed = 11;
            profiles.emplace_back("brittle", brittle);
            ForgettingProfile collateral;
            collateral.forget_entities = {seed_name};
            collateral.p_block_by_hops = {{1, 1.0}, {2, 1.0}, {3, 1.0}};
            collateral.collateral_radius = 1;
            collateral.p_collateral = 0.5;
            collateral.rng_seed = 22;
            profiles.emplace_back("collateral", collateral);
            ForgettingProfile partial;
            partial.forget_entities = {seed_name};
            partial.p_block_by_hops = {{1, 0.7}, {2, 0.7}, {3, 0.7}};
            partial.rng_seed = 33;
            profiles.emplace_back("partial", partial);
        }

        std::map<std::string, ProbeKind> kind_of;
        for (const auto& p : sampled.probes) kind_of[p.id] = p.kind;

        for (const auto& [label, profile] : profiles) {
            SyntheticWorld unlearned(spec, profile);
            auto ep = world_endpoint(spec, profile);
            EvaluationResult ev = evaluate(*ep, sampled.probes, label);
            ScoreReport want = expected_scores(unlearned, manifest, sampled.probes, label);
            if (ev.report.acc != want.acc || ev.report.forget_score != want.forget_score ||
                ev.report.retain_score != want.retain_score ||
                ev.report.overall != want.overall) {
                why = "world " + std::to_string(seed) + " profile " + label +
                      ": evaluate != oracle replay";
                break;
            }
            auto* pool = label == "brittle"    ? &brittle_pool
                         : label == "collateral" ? &collateral_pool
                                                 : nullptr;
            if (pool)
                for (const auto& ga : ev.graded) {
                    auto& [c, t] = (*pool)[to_string(kind_of.at(ga.probe_id))];
                    ++t;
                    if (ga.correct) ++c;
                }
        }
    }

    auto acc = [](const std::pair<int, int>& ct) {
        return ct.second ? static_cast<double>(ct.first) / ct.second : -1.0;
    };
    if (why.empty()) {
        double a1 = acc(brittle_pool["forget_1hop"]);
        double a2 = acc(brittle_pool["forget_2hop"]);
        double a3 = acc(brittle_pool["forget_3hop"]);
        if (!(a1 >= 0 && a2 >= 0 && a3 >= 0 && a1 < a2 && a2 < a3))
            why = "brittle pooled hop ordering violated: " + std::to_string(a1) + " / " +
                  std::to_string(a2) + " / " + std::to_string(a3);
        double r1 = acc(collateral_pool["retain_1away"]);
        double r2 = acc(collateral_pool["retain_2away"]);
        if (why.empty() && !(r1 >= 0 && r2 >= 0 && r1 < r2))
            why = "collateral pooled retention ordering violated: " + std::to_string(r1) +
                  " / " + std::to_string(r2);
    }
    auto elapsed =
        std::chrono::duration_cast<std::chrono::seconds>(std::chrono::steady_clock::now() - t0);
    if (why.empty() && elapsed.count() >= 120)
        why = "took " + std::to_string(elapsed.count()) + "s (limit 120s)";
    report(4, "20 synthetic worlds x 5 profiles match the exact replay oracle", why.empty(), why);
}

void criterion_builder_fidelity() {
    std::string why;
    for (uint64_t seed = 50; seed < 60 && why.empty(); ++seed) {
        auto spec = random_world(seed, 12);
        auto ep = world_endpoint(spec);
        KnowledgeGraph g = expand(*ep, spec.seeds, generous_budget(spec));

        std::set<std::string> got;
        for (const auto& [_, e] : g.edges)
            got.insert(g.node(e.subject).canonical_name + "|" + e.relation + "|" +
                       g.node(e.object).canonical_name);
        auto want = world_triples(spec);
        if (got != want) {
            why = "world " + std::to_string(seed) + ": edge set differs (got " +
                  std::to_string(got.size()) + ", want " + std::to_string(want.size()) + ")";
            break;
        }
        auto bfs = world_bfs(spec);
        if (g.nodes.size() != bfs.size()) {
            why = "world " + std::to_string(seed) + ": node count " +
                  std::to_string(g.nodes.size()) + " != reachable " +
                  std::to_string(bfs.size());
            break;
        }
        if (!g.validate().empty()) why = "world " + std::to_string(seed) + ": invalid graph";
    }

    if (why.empty()) {
        // Planted alias split: two surface forms of the seed author appear as
        // distinct subjects and must merge into one node.
        WorldSpec w;
        w.facts = {{"Stephen King", "wrote", "The Shining"},
                   {"Stephen Edwin King", "wrote", "Misery"},
                   {"The Shining", "features", "Jack Torrance"}};
        w.aliases["Stephen King"] = {"Stephen King", "Stephen Edwin King"};
        w.seeds = {"Stephen King"};
        auto ep = world_endpoint(w);
        KnowledgeGraph g = expand(*ep, w.seeds, generous_budget(w));
        if (g.nodes.size() != 4 || g.seeds.size() != 1) {
            why = "alias world: expected 4 nodes after merge";
        } else {
            const auto& king = g.node(g.seeds[0]);
            if (!king.aliases.count("Stephen King") || !king.aliases.count("Stephen Edwin King"))
                why = "alias world: merged surface form missing";
            bool redirected = false;
            for (const auto& [_, e] : g.edges)
                if (e.relation == "wrote" && g.node(e.object).canonical_name == "Misery" &&
                    e.subject == king.id && e.expected_forget)
                    redirected = true;
            if (why.empty() && !redirected)
                why = "alias world: edge not redirected to merged node";
        }
    }
    report(5, "builder recovers worlds with 100% precision/recall and merges planted aliases",
           why.empty(), why);
}

void criterion_budget_safety() {
    std::string why;
    auto spec = random_world(3, 12);
    auto inner = std::make_shared<SyntheticWorld>(spec);
    ExpansionBudget budget{8, 0.6, 2, 2};
    int cap = static_cast<int>(std::ceil(budget.a_total()));
    for (uint64_t trial = 0; trial < 100 && why.empty(); ++trial) {
        EndpointOptions opts;
        opts.retry_attempts = 2;
        opts.retry_backoff_ms = 1;
        auto ep = ModelEndpoint::synthetic(
            std::make_shared<FaultInjectingModel>(inner, 0.2, trial), opts);
        int billed = 0;
        ep->set_observer([&](const std::string&) { ++billed; });
        try {
            KnowledgeGraph g = expand(*ep, spec.seeds, budget);
            if (g.calls_used > cap)
                why = "trial " + std::to_string(trial) + ": calls_used " +
                      std::to_string(g.calls_used) + " > " + std::to_string(cap);
        } catch (const std::exception&) {
            // A failed build is acceptable; overspending is not.
        }
        if (why.empty() && billed > cap)
            why = "trial " + std::to_string(trial) + ": billed " + std::to_string(billed) +
                  " > " + std::to_string(cap);
    }
    report(6, "100 fault-injected builds never exceed ceil(a_total) = " + std::to_string(cap),
           why.empty(), why);
}

void criterion_coverage() {
    std::string why;
    auto spec = random_world(404, 16);
    auto extractor = world_endpoint(spec);

    KnowledgeGraph full;
    std::vector<BenchmarkProbe> benchmark;
    auto ensure_node = [&](const std::string& name) {
        auto id = entity_id(text::normalize_name(name));
        if (!full.has_node(id)) {
            EntityNode n;
            n.id = id;
            n.canonical_name = text::normalize_name(name);
            n.aliases = {n.canonical_name};
            full.nodes[id] = n;
        }
        return id;
    };
    for (const auto& f : spec.facts) {
        auto s = ensure_node(f.subject);
        auto o = ensure_node(f.object);
        full.add_edge({s, text::normalize_relation(f.relation), o, false, "bench"});
        BenchmarkProbe p;
        p.question = questions::render({f.subject, {{f.relation, false}}});
        p.answers = {f.object};
        benchmark.push_back(p);
    }

    auto rep = measure_coverage(full, *extractor, benchmark);
    if (rep.coverage != 1.0 || rep.unmatchable != 0)
        why = "full graph coverage " + std::to_string(rep.coverage) + " != 1.0";

    if (why.empty()) {
        auto pruned = full;
        int drop = static_cast<int>(pruned.edges.size()) / 4;
        for (int i = 0; i < drop; ++i) pruned.edges.erase(pruned.edges.begin());
        auto r = measure_coverage(pruned, *extractor, benchmark);
        double expect = static_cast<double>(pruned.edges.size()) / full.edges.size();
        if (std::fabs(r.coverage - expect) > 1.0 / r.total + 1e-12)
            why = "75% graph coverage " + std::to_string(r.coverage) + " vs expected " +
                  std::to_string(expect);
    }

    if (why.empty()) {
        std::vector<KnowledgeGraph> nested;
        for (size_t keep : {4ul, 8ul, 12ul, full.edges.size()}) {
            KnowledgeGraph g = full;
            while (g.edges.size() > keep) g.edges.erase(std::prev(g.edges.end()));
            nested.push_back(std::move(g));
        }
        auto curve = coverage_curve(nested, *extractor, benchmark);
        for (size_t i = 1; i < curve.size(); ++i)
            if (curve[i].coverage < curve[i - 1].coverage - 1e-12)
                why = "coverage curve decreased at point " + std::to_string(i);
    }
    report(7, "benchmark coverage oracle: 1.0 full, 0.75 pruned, monotone curves", why.empty(),
           why);
}

RunConfig accept_config(const fs::path& dir, int max_in_flight) {
    auto spec = random_world(11, 12);
    write_file((dir / "world.json").string(), spec.to_json().dump() + "\n");
    ForgettingProfile profile;
    profile.forget_entities = {world_canon(spec, spec.seeds.front())};
    profile.p_block_by_hops = {{1, 0.7}, {2, 0.7}, {3, 0.7}};
    profile.rng_seed = 5;
    write_file((dir / "profile.json").string(), profile.to_json().dump() + "\n");

    RunConfig c;
    c.seeds = spec.seeds;
    c.budget = generous_budget(spec);
    c.per_kind = 5;
    c.sample_seed = 13;
    c.target = {"synthetic:" + (dir / "world.json").string(), "target", max_in_flight,
                std::nullopt};
    c.unlearned = {"synthetic:" + (dir / "world.json").string() + ":" +
                       (dir / "profile.json").string(),
                   "unlearned", max_in_flight, std::nullopt};
    c.graph_path = (dir / "graph.json").string();
    c.probes_path = (dir / "probes.jsonl").string();
    c.filtered_path = (dir / "filtered.jsonl").string();
    c.manifest_path = (dir / "manifest.json").string();
    c.results_path = (dir / "results.json").string();
    return c;
}

// Artifact bytes with the config-dependent input_hash field removed, so runs
// under different endpoint settings stay comparable.
std::string stripped_artifact(const std::string& path) {
    std::string body = read_file(path);
    auto nl = body.find('\n');
    auto first = nlohmann::json::parse(body.substr(0, nl));
    first.erase("input_hash");
    return first.dump() + body.substr(nl);
}

void criterion_determinism() {
    std::string why;
    fs::path dir = fs::temp_directory_path() / "kgprobe_accept_ws";
    fs::remove_all(dir);
    fs::create_directories(dir);

    const std::vector<std::string> names = {"graph.json", "probes.jsonl", "filtered.jsonl",
                                            "manifest.json", "results.json"};
    auto run = [&](int mif) {
        for (const auto& name : names) fs::remove(dir / name);
        auto cfg = accept_config(dir, mif);
        std::ostringstream log;
        return run_pipeline(cfg, {}, log);
    };
    auto snapshot = [&](bool strip) {
        std::map<std::string, std::string> out;
        for (const auto& name : names) {
            auto path = (dir / name).string();
            out[name] = strip ? stripped_artifact(path) : read_file(path);
        }
        return out;
    };

    if (run(1)) why = "first pipeline run failed";
    auto first = why.empty() ? snapshot(false) : std::map<std::string, std::string>{};
    auto first_stripped = why.empty() ? snapshot(true) : first;
    if (why.empty() && run(1)) why = "second pipeline run failed";
    if (why.empty())
        for (const auto& name : names)
            if (read_file((dir / name).string()) != first.at(name)) {
                why = name + " differs between identical runs";
                break;
            }
    if (why.empty() && run(8)) why = "max_in_flight=8 pipeline run failed";
    if (why.empty()) {
        // The input hash embeds the endpoint settings, so compare with it
        // stripped; everything else must match bit for bit.
        auto wide = snapshot(true);
        for (const auto& name : names)
            if (wide.at(name) != first_stripped.at(name)) {
                why = name + " differs between max_in_flight 1 and 8";
                break;
            }
    }
    fs::remove_all(dir);
    report(8, "byte-identical artifacts across reruns and max_in_flight in {1, 8}", why.empty(),
           why);
}

void criterion_property_suites() {
    std::string why;

    // Score algebra.
    {
        std::mt19937_64 rng(1);
        int cases = 0;
        for (int i = 0; i < 1200 && why.empty(); ++i) {
            double f = (rng() % 1001) / 1000.0;
            double r = (rng() % 1001) / 1000.0;
            double h = harmonic_overall(f, r);
            double lo = std::min(1.0 - f, r), hi = std::max(1.0 - f, r);
            if (h < 0.0 || h > 1.0 || (lo > 0 && (h < lo - 1e-12 || h > hi + 1e-12)))
                why = "harmonic mean left its bounds";
            if (std::fabs(h - harmonic_overall(1.0 - r, 1.0 - f)) > 1e-12)
                why = "harmonic mean asymmetric";
            ++cases;
        }
        if (why.empty() && cases < 1000) why = "score algebra suite too small";
    }

    // Path faithfulness: every emitted chain replays over the graph.
    if (why.empty()) {
        std::mt19937_64 rng(2);
        int cases = 0;
        while (cases < 1000 && why.empty()) {
            auto g = random_graph(rng, 11);
            for (const auto& [target, _] : g.nodes) {
                for (int len = 1; len <= 3; ++len) {
                    auto chains = paths_from_seed(g, target, len);
                    for (const auto& c : chains) {
                        if (static_cast<int>(c.size()) != len) why = "chain length off";
                        for (size_t h = 0; h < c.size(); ++h) {
                            auto it = g.edges.find(c[h].edge_key);
                            if (it == g.edges.end()) {
                                why = "chain references missing edge";
                                continue;
                            }
                            const auto& e = it->second;
                            const std::string& from = c[h].inverted ? e.object : e.subject;
                            const std::string& to = c[h].inverted ? e.subject : e.object;
                            if (c[h].from != from || c[h].to != to) why = "hop orientation off";
                            if (h > 0 && c[h - 1].to != c[h].from) why = "chain not contiguous";
                        }
                        if (!c.empty()) {
                            if (c.back().to != target) why = "chain misses target";
                            if (!g.edges.at(c.back().edge_key).expected_forget)
                                why = "terminal hop not forgettable";
                        }
                    }
                    ++cases;
                }
            }
        }
    }

    // Prefilter soundness: the pre-unlearning model re-answers every passed
    // probe correctly, so its accuracy on the filtered set is exactly 1.0.
    if (why.empty()) {
        int graded_total = 0;
        for (uint64_t seed = 100; graded_total < 1000 && why.empty(); ++seed) {
            auto spec = random_world(seed, 14);
            auto ep = world_endpoint(spec);
            KnowledgeGraph g = expand(*ep, spec.seeds, generous_budget(spec));
            auto res = prefilter(*ep, all_probes(g));
            std::vector<Probe> passed;
            for (auto& p : res.probes)
                if (p.prefilter_passed) passed.push_back(std::move(p));
            if (passed.empty()) continue;
            auto ev = evaluate(*ep, passed, "target");
            for (const auto& ga : ev.graded)
                if (!ga.correct) why = "prefiltered probe graded wrong on the source model";
            graded_total += static_cast<int>(ev.graded.size());
        }
        if (why.empty() && graded_total < 1000) why = "prefilter suite too small";
    }

    // paths_from_seed against brute force on small graphs.
    if (why.empty()) {
        std::mt19937_64 rng(3);
        int cases = 0;
        while (cases < 1000 && why.empty()) {
            auto g = random_graph(rng, 15);
            for (const auto& [target, _] : g.nodes) {
                for (int len = 1; len <= 3; ++len) {
                    auto chains = paths_from_seed(g, target, len);
                    std::vector<std::string> got;
                    for (const auto& c : chains) got.push_back(chain_key(c));
                    if (got != oracle_chain_keys(g, target, len))
                        why = "paths_from_seed differs from brute force";
                    ++cases;
                }
            }
        }
    }

    report(9, "property suites (score algebra, path replay, prefilter soundness, brute force)",
           why.empty(), why);
}

}  // namespace

int main() {
    criterion_budget_formulas();
    criterion_published_tables();
    criterion_rank_correlation();
    criterion_synthetic_oracle();
    criterion_builder_fidelity();
    criterion_budget_safety();
    criterion_coverage();
    criterion_determinism();
    criterion_property_suites();
    std::cout << (g_failures ? "ACCEPTANCE: FAIL" : "ACCEPTANCE: PASS") << " (" << 9 - g_failures
              << "/9)\n";
    return g_failures ? 1 : 0;
}
