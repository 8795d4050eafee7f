#include "kgprobe/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include "kgprobe/builder.hpp"
#include "kgprobe/graph.hpp"
#include "kgprobe/probes.hpp"
#include "kgprobe/scorer.hpp"
#include "kgprobe/text.hpp"
#include "kgprobe/world.hpp"

namespace kgprobe {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << body;
}

nlohmann::json EndpointSpec::to_json() const {
    return {{"uri", uri},
            {"model_id", model_id},
            {"max_in_flight", max_in_flight},
            {"cache_path", cache_path ? nlohmann::json(*cache_path) : nlohmann::json()}};
}

std::shared_ptr<ModelEndpoint> make_endpoint(const EndpointSpec& spec) {
    EndpointOptions opts;
    opts.model_id = spec.model_id;
    opts.max_in_flight = spec.max_in_flight;
    opts.cache_path = spec.cache_path;

    const std::string kScheme = "synthetic:";
    if (spec.uri.rfind(kScheme, 0) == 0) {
        std::string rest = spec.uri.substr(kScheme.size());
        auto colon = rest.find(':');
        std::string world_path = colon == std::string::npos ? rest : rest.substr(0, colon);
        auto world = WorldSpec::load(world_path);
        std::optional<ForgettingProfile> profile;
        if (colon != std::string::npos)
            profile = ForgettingProfile::load(rest.substr(colon + 1));
        auto model = std::make_shared<SyntheticWorld>(std::move(world), std::move(profile));
        return ModelEndpoint::synthetic(model, opts);
    }
    if (spec.uri.rfind("http://", 0) == 0 || spec.uri.rfind("https://", 0) == 0)
        return ModelEndpoint::remote(spec.uri, opts);
    throw std::invalid_argument("endpoint uri must be synthetic:<world.json>[:<profile.json>] "
                                "or an http(s) URL: " +
                                spec.uri);
}

nlohmann::json parse_config_tables(const std::string& body) {
    nlohmann::json out = nlohmann::json::object();
    std::string section;
    std::istringstream in(body);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = text::trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[' && t.back() == ']') {
            section = text::trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw std::invalid_argument("config line " + std::to_string(lineno) +
                                            ": empty table name");
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key = value");
        std::string key = text::trim(t.substr(0, eq));
        std::string val = text::trim(t.substr(eq + 1));
        auto parsed = nlohmann::json::parse(val, nullptr, false);
        if (parsed.is_discarded())
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": unreadable value for '" + key +
                                        "' (strings must be quoted)");
        nlohmann::json* slot = &out;
        if (!section.empty()) slot = &out[section];
        (*slot)[key] = std::move(parsed);
    }
    return out;
}

namespace {

EndpointSpec endpoint_from_table(const nlohmann::json& t) {
    EndpointSpec e;
    e.uri = t.at("uri").get<std::string>();
    e.model_id = t.value("model_id", e.model_id);
    e.max_in_flight = t.value("max_in_flight", e.max_in_flight);
    if (t.contains("cache_path") && !t.at("cache_path").is_null())
        e.cache_path = t.at("cache_path").get<std::string>();
    return e;
}

std::string content_hash_of(const nlohmann::json& j) {
    return text::fnv1a64_hex(j.dump() + "\n");
}

// First line of a pipeline JSONL artifact; identified by a missing "id".
std::optional<nlohmann::json> jsonl_header(const std::string& body) {
    std::istringstream in(body);
    std::string line;
    while (std::getline(in, line)) {
        if (text::trim(line).empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || j.contains("id")) return std::nullopt;
        return j;
    }
    return std::nullopt;
}

struct CallLog {
    std::map<std::string, int> counts;

    static std::string classify(const std::string& prompt) {
        auto starts = [&](const char* p) { return prompt.rfind(p, 0) == 0; };
        if (starts("Generate a list of diverse questions") ||
            starts("Answer each of the following questions"))
            return "elicit";
        if (starts("In a knowledge graph") || starts("Extract the key entity")) return "extract";
        if (starts("Rate the relevance")) return "relevance";
        if (starts("Is \"")) return "alias";
        if (starts("If all knowledge of")) return "judge";
        if (starts("Does the response below state")) return "grade";
        return "probe";
    }

    void attach(ModelEndpoint& ep) {
        ep.set_observer([this](const std::string& prompt) { ++counts[classify(prompt)]; });
    }

    void report(std::ostream& log, const std::string& stage) const {
        for (const auto& [cls, n] : counts)
            log << "event=model_call stage=" << stage << " class=" << cls << " count=" << n
                << "\n";
    }
};

}  // namespace

void RunConfig::validate() const {
    budget.validate();
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be non-empty");
    if (per_kind < 1) throw std::invalid_argument("config: per_kind must be >= 1");
    if (max_hops < 1 || max_hops > 3)
        throw std::invalid_argument("config: max_hops must be 1..3");
    if (target.uri.empty() || unlearned.uri.empty())
        throw std::invalid_argument("config: target and unlearned endpoint uris are required");
}

RunConfig RunConfig::from_toml(const std::string& body) {
    auto j = parse_config_tables(body);
    RunConfig c;
    c.seeds = j.value("seeds", std::vector<std::string>{});
    c.model_label = j.value("model_label", c.model_label);

    if (j.contains("budget")) c.budget = ExpansionBudget::from_json(j.at("budget"));
    if (j.contains("probes")) {
        const auto& p = j.at("probes");
        c.per_kind = p.value("per_kind", c.per_kind);
        c.sample_seed = p.value("sample_seed", c.sample_seed);
        c.max_hops = p.value("max_hops", c.max_hops);
        c.top_relations = p.value("top_relations", c.top_relations);
        c.strict_scores = p.value("strict_scores", c.strict_scores);
        c.allow_truncated = p.value("allow_truncated", c.allow_truncated);
    }
    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        c.graph_path = p.value("graph", c.graph_path);
        c.probes_path = p.value("probes", c.probes_path);
        c.filtered_path = p.value("filtered", c.filtered_path);
        c.manifest_path = p.value("manifest", c.manifest_path);
        c.results_path = p.value("results", c.results_path);
    }
    if (!j.contains("endpoints.target") || !j.contains("endpoints.unlearned"))
        throw std::invalid_argument(
            "config: [endpoints.target] and [endpoints.unlearned] tables are required");
    c.target = endpoint_from_table(j.at("endpoints.target"));
    c.unlearned = endpoint_from_table(j.at("endpoints.unlearned"));
    if (j.contains("endpoints.judge")) c.judge = endpoint_from_table(j.at("endpoints.judge"));
    c.validate();
    return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
    return from_toml(read_file(path));
}

namespace {

void stage_build_graph(const RunConfig& c, std::ostream& log) {
    std::string h = content_hash_of(
        {{"seeds", c.seeds}, {"budget", c.budget.to_json()}, {"target", c.target.to_json()}});
    if (std::filesystem::exists(c.graph_path)) {
        auto j = nlohmann::json::parse(read_file(c.graph_path));
        if (j.value("input_hash", "") == h) {
            log << "event=stage stage=build-graph status=up-to-date calls=0\n";
            return;
        }
    }
    auto ep = make_endpoint(c.target);
    CallLog calls;
    calls.attach(*ep);
    BuildDiagnostics diag;
    KnowledgeGraph g = expand(*ep, c.seeds, c.budget, &log, &diag);
    auto violations = g.validate();
    if (!violations.empty())
        throw std::runtime_error("built graph fails validation: " + violations.front());
    write_file(c.graph_path,
               nlohmann::json{{"graph", g.to_json()}, {"input_hash", h}}.dump() + "\n");
    calls.report(log, "build-graph");
    log << "event=stage stage=build-graph status=written nodes=" << g.nodes.size()
        << " edges=" << g.edges.size() << " truncated=" << (g.truncated ? 1 : 0) << "\n";
}

KnowledgeGraph load_graph_artifact(const RunConfig& c, bool enforce_flags) {
    auto j = nlohmann::json::parse(read_file(c.graph_path));
    KnowledgeGraph g = KnowledgeGraph::from_json(j.at("graph"));
    if (enforce_flags && g.truncated && !c.allow_truncated)
        throw std::runtime_error("graph artifact is truncated; rerun build-graph with a larger "
                                 "budget or set allow_truncated");
    return g;
}

void stage_gen_probes(const RunConfig& c, std::ostream& log) {
    std::string graph_bytes = read_file(c.graph_path);
    std::string h = content_hash_of({{"graph", text::fnv1a64_hex(graph_bytes)},
                                     {"max_hops", c.max_hops},
                                     {"top_relations", c.top_relations}});
    if (std::filesystem::exists(c.probes_path)) {
        auto header = jsonl_header(read_file(c.probes_path));
        if (header && header->value("input_hash", "") == h) {
            log << "event=stage stage=gen-probes status=up-to-date calls=0\n";
            return;
        }
    }
    KnowledgeGraph g = load_graph_artifact(c, true);

    std::vector<Probe> probes = gen_single_hop(g);
    std::vector<Probe> two_hop, three_hop;
    if (c.max_hops >= 2) two_hop = gen_multi_hop(g, 2);
    if (c.max_hops >= 3) three_hop = gen_multi_hop(g, 3);
    for (const auto& p : two_hop)
        if (auto a = perturb_alias(g, p)) probes.push_back(std::move(*a));
    for (const auto& p : two_hop) probes.push_back(decompose(p));
    for (const auto& p : three_hop) probes.push_back(decompose(p));
    probes.insert(probes.end(), two_hop.begin(), two_hop.end());
    probes.insert(probes.end(), three_hop.begin(), three_hop.end());
    for (auto& p : gen_retention(g, {c.top_relations})) probes.push_back(std::move(p));

    std::string body = nlohmann::json{{"input_hash", h}, {"artifact", "probes"}}.dump() + "\n" +
                       probes_to_jsonl(probes);
    write_file(c.probes_path, body);
    log << "event=stage stage=gen-probes status=written probes=" << probes.size() << "\n";
}

void stage_prefilter(const RunConfig& c, std::ostream& log) {
    std::string probes_bytes = read_file(c.probes_path);
    std::string h = content_hash_of({{"probes", text::fnv1a64_hex(probes_bytes)},
                                     {"target", c.target.to_json()}});
    if (std::filesystem::exists(c.filtered_path)) {
        auto header = jsonl_header(read_file(c.filtered_path));
        if (header && header->value("input_hash", "") == h) {
            log << "event=stage stage=prefilter status=up-to-date calls=0\n";
            return;
        }
    }
    auto ep = make_endpoint(c.target);
    CallLog calls;
    calls.attach(*ep);
    PrefilterResult res = prefilter(*ep, probes_from_jsonl(probes_bytes));
    std::string body = nlohmann::json{{"input_hash", h},
                                      {"artifact", "probes_filtered"},
                                      {"prefilter_partial", res.partial},
                                      {"passed", res.passed}}
                           .dump() +
                       "\n" + probes_to_jsonl(res.probes);
    write_file(c.filtered_path, body);
    calls.report(log, "prefilter");
    log << "event=stage stage=prefilter status=written passed=" << res.passed
        << " partial=" << (res.partial ? 1 : 0) << "\n";
}

void stage_evaluate(const RunConfig& c, std::ostream& log) {
    std::string filtered_bytes = read_file(c.filtered_path);
    auto header = jsonl_header(filtered_bytes);
    if (header && header->value("prefilter_partial", false))
        throw std::runtime_error("prefiltered probe set is partial; refusing to evaluate");

    nlohmann::json judge_j = c.judge ? c.judge->to_json() : nlohmann::json();
    std::string h = content_hash_of({{"filtered", text::fnv1a64_hex(filtered_bytes)},
                                     {"per_kind", c.per_kind},
                                     {"sample_seed", c.sample_seed},
                                     {"unlearned", c.unlearned.to_json()},
                                     {"judge", judge_j},
                                     {"model_label", c.model_label},
                                     {"strict", c.strict_scores}});
    if (std::filesystem::exists(c.results_path)) {
        auto j = nlohmann::json::parse(read_file(c.results_path));
        if (j.value("input_hash", "") == h) {
            log << "event=stage stage=evaluate status=up-to-date calls=0\n";
            return;
        }
    }
    KnowledgeGraph g = load_graph_artifact(c, true);

    SampleResult sampled = sample(probes_from_jsonl(filtered_bytes), c.per_kind, c.sample_seed);
    for (const auto& [kind, missing] : sampled.shortfall)
        log << "event=shortfall kind=" << kind << " missing=" << missing << "\n";
    Manifest manifest = build_manifest(g, sampled, c.sample_seed, c.per_kind, false);
    nlohmann::json mj = manifest.to_json();
    std::string manifest_hash = text::fnv1a64_hex(mj.dump() + "\n");
    mj["input_hash"] = h;
    write_file(c.manifest_path, mj.dump() + "\n");

    auto ep = make_endpoint(c.unlearned);
    CallLog calls;
    calls.attach(*ep);
    std::shared_ptr<ModelEndpoint> judge_ep;
    if (c.judge) {
        judge_ep = make_endpoint(*c.judge);
        calls.attach(*judge_ep);
    }
    EvaluationResult ev =
        evaluate(*ep, sampled.probes, c.model_label, judge_ep.get(), c.strict_scores);
    nlohmann::json rj = results_json(c.model_label, g.content_hash(), manifest_hash, ev);
    rj["input_hash"] = h;
    write_file(c.results_path, rj.dump() + "\n");
    calls.report(log, "evaluate");
    log << "event=stage stage=evaluate status=written overall=" << ev.report.overall << "\n";
}

}  // namespace

int run_pipeline(const RunConfig& config, const std::set<std::string>& stages, std::ostream& log) {
    config.validate();
    static const std::vector<std::string> kOrder = {"build-graph", "gen-probes", "prefilter",
                                                    "evaluate"};
    for (const auto& s : stages)
        if (std::find(kOrder.begin(), kOrder.end(), s) == kOrder.end())
            throw std::invalid_argument("unknown pipeline stage: " + s);
    for (const auto& stage : kOrder) {
        if (!stages.empty() && !stages.count(stage)) continue;
        try {
            if (stage == "build-graph") stage_build_graph(config, log);
            if (stage == "gen-probes") stage_gen_probes(config, log);
            if (stage == "prefilter") stage_prefilter(config, log);
            if (stage == "evaluate") stage_evaluate(config, log);
        } catch (const std::exception& e) {
            log << "event=stage stage=" << stage << " status=failed error=\"" << e.what()
                << "\"\n";
            return 1;
        }
    }
    return 0;
}

}  // namespace kgprobe
