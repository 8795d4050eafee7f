#include <iostream>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgprobe/builder.hpp"
#include "kgprobe/coverage.hpp"
#include "kgprobe/graph.hpp"
#include "kgprobe/pipeline.hpp"
#include "kgprobe/probes.hpp"
#include "kgprobe/scorer.hpp"
#include "kgprobe/text.hpp"
#include "kgprobe/world.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

const char* kSchemas = R"schema({
  "graph": {
    "input_hash": "string (hex)",
    "graph": {
      "seeds": ["node id"],
      "nodes": [{"id": "string", "canonical_name": "string", "aliases": ["string"], "depth": "int", "relevance": "int 0-10"}],
      "edges": [{"subject": "node id", "relation": "string", "object": "node id", "expected_forget": "bool", "provenance": "string"}],
      "budget": {"b0": "int", "alpha": "float (0,1)", "d_max": "int", "k": "int", "relevance_threshold": "int 0-10"},
      "calls_used": "int",
      "truncated": "bool"
    }
  },
  "probes": "JSONL; header line {input_hash, artifact}, then one probe per line: {id, kind, question, expected[], canonical_answer, path[{edge_key, relation, inverted, from, to}], prefilter_passed}",
  "manifest": {"input_hash": "string", "graph_hash": "string", "kinds": {"kind": ["probe id"]}, "sample_seed": "int", "per_kind": "int", "shortfall": {"kind": "int"}, "prefilter_partial": "bool"},
  "results": {"input_hash": "string", "model_label": "string", "graph_hash": "string", "manifest_hash": "string", "report": {"model_label": "string", "acc": {"kind": "float"}, "forget_score": "float", "retain_score": "float", "overall": "float", "n_per_kind": {"kind": "int"}}, "graded": [{"probe_id": "string", "raw_answer": "string", "correct": "bool", "grader": "string"}]},
  "coverage": {"total": "int", "matched": "int", "unmatched": "int", "unmatchable": "int", "coverage": "float", "curve": [{"node_count": "int", "coverage": "float"}]},
  "world": {"facts": [["subject", "relation", "object"]], "aliases": {"canonical": ["surface"]}, "seeds": ["string"], "ignorance": ["fact index"]},
  "profile": {"forget_entities": ["string"], "p_block_by_hops": {"hops": "float"}, "collateral_radius": "int", "p_collateral": "float", "rng_seed": "int"}
})schema";

struct EndpointArgs {
    std::string uri;
    std::string model_id = "default";
    int max_in_flight = 1;
    std::string cache_path;

    kgprobe::EndpointSpec spec() const {
        kgprobe::EndpointSpec s;
        s.uri = uri;
        s.model_id = model_id;
        s.max_in_flight = max_in_flight;
        if (!cache_path.empty()) s.cache_path = cache_path;
        return s;
    }
};

void add_endpoint_flags(CLI::App* cmd, EndpointArgs& args, const std::string& flag = "--endpoint") {
    cmd->add_option(flag, args.uri,
                    "synthetic:<world.json>[:<profile.json>] or an http(s) base URL")
        ->required();
    cmd->add_option("--model", args.model_id, "model id sent to remote endpoints");
    cmd->add_option("--max-in-flight", args.max_in_flight, "parallel call cap");
    cmd->add_option("--cache", args.cache_path, "append-only JSONL completion cache");
}

kgprobe::KnowledgeGraph load_graph(const std::string& path) {
    auto j = nlohmann::json::parse(kgprobe::read_file(path));
    return kgprobe::KnowledgeGraph::from_json(j.contains("graph") ? j.at("graph") : j);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-graph probing toolkit for unlearning evaluation"};
    app.require_subcommand(0, 1);
    bool show_version = false, show_schema = false;
    app.add_flag("--version", show_version, "print version and exit");
    app.add_flag("--schema", show_schema, "print JSON schemas for all artifacts and exit");

    // estimate
    auto* est = app.add_subcommand("estimate", "print expansion-budget totals");
    kgprobe::ExpansionBudget budget;
    est->add_option("--b0", budget.b0, "level-0 branching factor");
    est->add_option("--alpha", budget.alpha, "decay factor, strictly inside (0,1)");
    est->add_option("--dmax", budget.d_max, "maximum expansion depth");
    est->add_option("--k", budget.k, "model calls per node expansion");

    // build-graph
    auto* bg = app.add_subcommand("build-graph", "expand a knowledge graph from seed entities");
    std::vector<std::string> seeds;
    EndpointArgs bg_ep;
    std::string bg_out = "graph.json";
    kgprobe::ExpansionBudget bg_budget;
    bg->add_option("--seed", seeds, "seed entity name (repeatable)")->required();
    bg->add_option("--b0", bg_budget.b0, "level-0 branching factor");
    bg->add_option("--alpha", bg_budget.alpha, "decay factor, strictly inside (0,1)");
    bg->add_option("--dmax", bg_budget.d_max, "maximum expansion depth");
    bg->add_option("--k", bg_budget.k, "model calls per node expansion");
    bg->add_option("--threshold", bg_budget.relevance_threshold, "relevance cut, 0-10");
    add_endpoint_flags(bg, bg_ep);
    bg->add_option("--out", bg_out, "output graph file");

    // gen-probes
    auto* gp = app.add_subcommand("gen-probes", "generate probe suites from a graph");
    std::string gp_graph, gp_out = "probes.jsonl";
    int gp_max_hops = 3, gp_top_relations = 5;
    gp->add_option("--graph", gp_graph, "graph artifact")->required();
    gp->add_option("--out", gp_out, "output probe JSONL");
    gp->add_option("--max-hops", gp_max_hops, "hop cap, 1-3");
    gp->add_option("--top-relations", gp_top_relations, "relation count for retention probes");

    // prefilter
    auto* pf = app.add_subcommand("prefilter", "grade probes against the pre-unlearning model");
    std::string pf_in, pf_out = "probes_filtered.jsonl";
    EndpointArgs pf_ep;
    pf->add_option("--probes", pf_in, "probe JSONL")->required();
    add_endpoint_flags(pf, pf_ep);
    pf->add_option("--out", pf_out, "output probe JSONL with prefilter_passed set");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "sample probes and score a model");
    std::string ev_graph, ev_probes, ev_out = "results.json", ev_manifest = "manifest.json";
    std::string ev_label = "unlearned";
    int ev_per_kind = 100;
    uint64_t ev_seed = 7;
    EndpointArgs ev_ep;
    ev->add_option("--graph", ev_graph, "graph artifact")->required();
    ev->add_option("--probes", ev_probes, "prefiltered probe JSONL")->required();
    add_endpoint_flags(ev, ev_ep);
    ev->add_option("--per-kind", ev_per_kind, "sample size per probe kind");
    ev->add_option("--sample-seed", ev_seed, "sampling seed");
    ev->add_option("--label", ev_label, "model label in the report");
    ev->add_option("--out", ev_out, "results file");
    ev->add_option("--manifest", ev_manifest, "manifest file");

    // score
    auto* sc = app.add_subcommand("score", "print the score table for one results file");
    std::string sc_results;
    sc->add_option("--results", sc_results, "results file")->required();

    // compare
    auto* cmp = app.add_subcommand("compare", "tabulate several results files");
    std::vector<std::string> cmp_results;
    cmp->add_option("--results", cmp_results, "results files")->required()->expected(-1);

    // coverage
    auto* cov = app.add_subcommand("coverage", "benchmark coverage of a graph");
    std::string cov_graph, cov_bench, cov_out = "coverage.json";
    EndpointArgs cov_ep;
    std::vector<std::string> cov_curve_graphs;
    cov->add_option("--graph", cov_graph, "graph artifact")->required();
    cov->add_option("--benchmark", cov_bench, "benchmark JSONL {question, answers[], open_ended}")
        ->required();
    add_endpoint_flags(cov, cov_ep, "--extractor");
    cov->add_option("--curve-graphs", cov_curve_graphs,
                    "graphs at growing budgets for a coverage curve");
    cov->add_option("--out", cov_out, "coverage report file");

    // simulate
    auto* sim = app.add_subcommand("simulate", "expected scores from a synthetic world");
    std::string sim_world, sim_profile, sim_probes, sim_manifest, sim_label = "expected";
    sim->add_option("--world", sim_world, "world spec JSON")->required();
    sim->add_option("--profile", sim_profile, "forgetting profile JSON");
    sim->add_option("--probes", sim_probes, "probe JSONL")->required();
    sim->add_option("--manifest", sim_manifest, "manifest JSON")->required();
    sim->add_option("--label", sim_label, "report label");

    // run
    auto* run = app.add_subcommand("run", "run the configured pipeline");
    std::string run_config;
    std::vector<std::string> run_stages;
    run->add_option("--config", run_config, "pipeline config file")->required();
    run->add_option("--stages", run_stages, "subset of stages to run");

    CLI11_PARSE(app, argc, argv);

    try {
        if (show_version) {
            std::cout << "kgprobe " << kVersion << "\n";
            return 0;
        }
        if (show_schema) {
            std::cout << kSchemas << "\n";
            return 0;
        }
        if (est->parsed()) {
            auto [n_total, a_total] = kgprobe::estimate_totals(budget);
            std::cout << "n_total=" << n_total << " a_total=" << a_total << "\n";
            return 0;
        }
        if (bg->parsed()) {
            auto ep = kgprobe::make_endpoint(bg_ep.spec());
            kgprobe::BuildDiagnostics diag;
            auto g = kgprobe::expand(*ep, seeds, bg_budget, &std::cerr, &diag);
            auto violations = g.validate();
            if (!violations.empty())
                throw std::runtime_error("graph validation failed: " + violations.front());
            kgprobe::write_file(bg_out, nlohmann::json{{"graph", g.to_json()}}.dump() + "\n");
            std::cerr << "nodes=" << g.nodes.size() << " edges=" << g.edges.size()
                      << " calls=" << g.calls_used << " truncated=" << g.truncated << "\n";
            return g.truncated ? 2 : 0;
        }
        if (gp->parsed()) {
            auto g = load_graph(gp_graph);
            std::vector<kgprobe::Probe> probes = kgprobe::gen_single_hop(g);
            std::vector<kgprobe::Probe> two, three;
            if (gp_max_hops >= 2) two = kgprobe::gen_multi_hop(g, 2);
            if (gp_max_hops >= 3) three = kgprobe::gen_multi_hop(g, 3);
            for (const auto& p : two)
                if (auto a = kgprobe::perturb_alias(g, p)) probes.push_back(std::move(*a));
            for (const auto& p : two) probes.push_back(kgprobe::decompose(p));
            for (const auto& p : three) probes.push_back(kgprobe::decompose(p));
            probes.insert(probes.end(), two.begin(), two.end());
            probes.insert(probes.end(), three.begin(), three.end());
            for (auto& p : kgprobe::gen_retention(g, {gp_top_relations}))
                probes.push_back(std::move(p));
            kgprobe::write_file(gp_out, kgprobe::probes_to_jsonl(probes));
            std::cerr << "probes=" << probes.size() << "\n";
            return 0;
        }
        if (pf->parsed()) {
            auto ep = kgprobe::make_endpoint(pf_ep.spec());
            auto res =
                kgprobe::prefilter(*ep, kgprobe::probes_from_jsonl(kgprobe::read_file(pf_in)));
            kgprobe::write_file(pf_out, kgprobe::probes_to_jsonl(res.probes));
            std::cerr << "passed=" << res.passed << " partial=" << res.partial << "\n";
            return res.partial ? 2 : 0;
        }
        if (ev->parsed()) {
            auto g = load_graph(ev_graph);
            auto sampled = kgprobe::sample(
                kgprobe::probes_from_jsonl(kgprobe::read_file(ev_probes)), ev_per_kind, ev_seed);
            auto manifest =
                kgprobe::build_manifest(g, sampled, ev_seed, ev_per_kind, false);
            std::string manifest_text = manifest.to_json().dump() + "\n";
            kgprobe::write_file(ev_manifest, manifest_text);
            auto ep = kgprobe::make_endpoint(ev_ep.spec());
            auto result = kgprobe::evaluate(*ep, sampled.probes, ev_label);
            kgprobe::write_file(
                ev_out, kgprobe::results_json(ev_label, g.content_hash(),
                                              kgprobe::text::fnv1a64_hex(manifest_text), result)
                                .dump() +
                            "\n");
            std::cout << result.report.to_json().dump(2) << "\n";
            return 0;
        }
        if (sc->parsed()) {
            auto j = nlohmann::json::parse(kgprobe::read_file(sc_results));
            std::cout << kgprobe::compare_markdown({j});
            return 0;
        }
        if (cmp->parsed()) {
            std::vector<nlohmann::json> all;
            for (const auto& p : cmp_results)
                all.push_back(nlohmann::json::parse(kgprobe::read_file(p)));
            std::cout << kgprobe::compare_markdown(all);
            return 0;
        }
        if (cov->parsed()) {
            auto g = load_graph(cov_graph);
            auto bench = kgprobe::benchmark_from_jsonl(kgprobe::read_file(cov_bench));
            auto ep = kgprobe::make_endpoint(cov_ep.spec());
            auto rep = kgprobe::measure_coverage(g, *ep, bench);
            nlohmann::json out = rep.to_json();
            if (!cov_curve_graphs.empty()) {
                std::vector<kgprobe::KnowledgeGraph> graphs;
                for (const auto& p : cov_curve_graphs) graphs.push_back(load_graph(p));
                nlohmann::json curve = nlohmann::json::array();
                for (const auto& pt : kgprobe::coverage_curve(graphs, *ep, bench))
                    curve.push_back(nlohmann::json{{"node_count", pt.node_count},
                                                   {"coverage", pt.coverage}});
                out["curve"] = curve;
            }
            kgprobe::write_file(cov_out, out.dump() + "\n");
            std::cout << out.dump(2) << "\n";
            return 0;
        }
        if (sim->parsed()) {
            auto world = kgprobe::WorldSpec::load(sim_world);
            std::optional<kgprobe::ForgettingProfile> profile;
            if (!sim_profile.empty()) profile = kgprobe::ForgettingProfile::load(sim_profile);
            kgprobe::SyntheticWorld sw(std::move(world), std::move(profile));
            auto probes = kgprobe::probes_from_jsonl(kgprobe::read_file(sim_probes));
            auto manifest = kgprobe::Manifest::from_json(
                nlohmann::json::parse(kgprobe::read_file(sim_manifest)));
            auto report = kgprobe::expected_scores(sw, manifest, probes, sim_label);
            std::cout << report.to_json().dump(2) << "\n";
            return 0;
        }
        if (run->parsed()) {
            auto cfg = kgprobe::RunConfig::from_file(run_config);
            std::set<std::string> stages(run_stages.begin(), run_stages.end());
            return kgprobe::run_pipeline(cfg, stages, std::cerr);
        }
        std::cout << app.help();
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
