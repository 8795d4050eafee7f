#include "kgprobe/world.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <random>
#include <sstream>

#include "kgprobe/coverage.hpp"
#include "kgprobe/questions.hpp"
#include "kgprobe/text.hpp"

namespace kgprobe {

namespace {

// Quoted segment starting at or after `from`; advances `from` past it.
std::optional<std::string> next_quoted(const std::string& s, size_t& from) {
    size_t open = s.find('"', from);
    if (open == std::string::npos) return std::nullopt;
    size_t close = s.find('"', open + 1);
    if (close == std::string::npos) return std::nullopt;
    from = close + 1;
    return s.substr(open + 1, close - open - 1);
}

std::optional<std::array<std::string, 3>> parse_paren_triple(const std::string& s, size_t from) {
    size_t open = s.find('(', from);
    if (open == std::string::npos) return std::nullopt;
    size_t p = open + 1;
    std::array<std::string, 3> out;
    for (int i = 0; i < 3; ++i) {
        auto q = next_quoted(s, p);
        if (!q) return std::nullopt;
        out[i] = *q;
    }
    return out;
}

}  // namespace

void WorldSpec::validate() const {
    if (seeds.empty()) throw std::invalid_argument("world: no seed entities");
    std::map<std::string, std::string> owner;
    for (const auto& [canon, group] : aliases) {
        if (!group.count(canon))
            throw std::invalid_argument("world: alias group for '" + canon +
                                        "' does not contain its canonical name");
        for (const auto& a : group) {
            auto na = text::normalize_name(a);
            auto [it, fresh] = owner.emplace(na, canon);
            if (!fresh && it->second != canon)
                throw std::invalid_argument("world: surface '" + a + "' in two alias groups");
        }
    }
    for (int idx : ignorance)
        if (idx < 0 || idx >= static_cast<int>(facts.size()))
            throw std::invalid_argument("world: ignorance index out of range");

    // Connectivity: every fact entity reachable from some seed.
    std::map<std::string, std::set<std::string>> adj;
    auto canon_of = [&](const std::string& name) {
        auto n = text::normalize_name(name);
        auto it = owner.find(n);
        return it != owner.end() ? text::normalize_name(it->second) : n;
    };
    for (const auto& f : facts) {
        auto s = canon_of(f.subject), o = canon_of(f.object);
        adj[s].insert(o);
        adj[o].insert(s);
    }
    std::set<std::string> seen;
    std::deque<std::string> q;
    for (const auto& s : seeds) {
        seen.insert(canon_of(s));
        q.push_back(canon_of(s));
    }
    while (!q.empty()) {
        auto cur = q.front();
        q.pop_front();
        for (const auto& n : adj[cur])
            if (seen.insert(n).second) q.push_back(n);
    }
    for (const auto& [node, _] : adj)
        if (!seen.count(node))
            throw std::invalid_argument("world: entity not connected to any seed: " + node);
}

nlohmann::json WorldSpec::to_json() const {
    nlohmann::json jfacts = nlohmann::json::array();
    for (const auto& f : facts) jfacts.push_back({f.subject, f.relation, f.object});
    nlohmann::json jaliases = nlohmann::json::object();
    for (const auto& [canon, group] : aliases)
        jaliases[canon] = std::vector<std::string>(group.begin(), group.end());
    return {{"facts", jfacts},
            {"aliases", jaliases},
            {"seeds", seeds},
            {"ignorance", std::vector<int>(ignorance.begin(), ignorance.end())}};
}

WorldSpec WorldSpec::from_json(const nlohmann::json& j) {
    WorldSpec w;
    for (const auto& jf : j.at("facts")) {
        WorldFact f{jf.at(0).get<std::string>(),
                    text::normalize_relation(jf.at(1).get<std::string>()),
                    jf.at(2).get<std::string>()};
        w.facts.push_back(std::move(f));
    }
    const nlohmann::json jaliases = j.value("aliases", nlohmann::json::object());
    for (const auto& [canon, group] : jaliases.items()) {
        std::set<std::string> g{canon};
        for (const auto& a : group) g.insert(a.get<std::string>());
        w.aliases.emplace(canon, std::move(g));
    }
    w.seeds = j.at("seeds").get<std::vector<std::string>>();
    for (const auto& i : j.value("ignorance", nlohmann::json::array()))
        w.ignorance.insert(i.get<int>());
    w.validate();
    return w;
}

WorldSpec WorldSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open world file: " + path);
    return from_json(nlohmann::json::parse(in));
}

nlohmann::json ForgettingProfile::to_json() const {
    nlohmann::json hops = nlohmann::json::object();
    for (const auto& [h, p] : p_block_by_hops) hops[std::to_string(h)] = p;
    return {{"forget_entities", std::vector<std::string>(forget_entities.begin(), forget_entities.end())},
            {"p_block_by_hops", hops},
            {"collateral_radius", collateral_radius},
            {"p_collateral", p_collateral},
            {"rng_seed", rng_seed}};
}

ForgettingProfile ForgettingProfile::from_json(const nlohmann::json& j) {
    ForgettingProfile p;
    for (const auto& e : j.at("forget_entities")) p.forget_entities.insert(e.get<std::string>());
    for (const auto& [h, prob] : j.at("p_block_by_hops").items()) {
        double v = prob.get<double>();
        if (v < 0.0 || v > 1.0) throw std::invalid_argument("profile: probability outside [0,1]");
        p.p_block_by_hops[std::stoi(h)] = v;
    }
    p.collateral_radius = j.value("collateral_radius", 0);
    p.p_collateral = j.value("p_collateral", 0.0);
    if (p.p_collateral < 0.0 || p.p_collateral > 1.0)
        throw std::invalid_argument("profile: p_collateral outside [0,1]");
    p.rng_seed = j.value("rng_seed", 0ULL);
    return p;
}

ForgettingProfile ForgettingProfile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open profile file: " + path);
    return from_json(nlohmann::json::parse(in));
}

SyntheticWorld::SyntheticWorld(WorldSpec spec, std::optional<ForgettingProfile> profile)
    : spec_(std::move(spec)), profile_(std::move(profile)) {
    spec_.validate();
    for (const auto& [canon, group] : spec_.aliases)
        for (const auto& a : group) norm_to_canonical_[text::normalize_name(a)] = canon;
    auto intern = [&](const std::string& name) -> std::string {
        auto n = text::normalize_name(name);
        auto it = norm_to_canonical_.find(n);
        if (it == norm_to_canonical_.end()) it = norm_to_canonical_.emplace(n, name).first;
        return it->second;
    };
    for (const auto& f : spec_.facts) {
        auto s = intern(f.subject), o = intern(f.object);
        adjacency_[s].insert(o);
        adjacency_[o].insert(s);
    }
    for (const auto& s : spec_.seeds) intern(s);

    if (profile_) {
        std::deque<std::string> q;
        for (const auto& fe : profile_->forget_entities) {
            auto c = canonical(fe);
            if (c.empty()) c = fe;
            forget_dist_[c] = 0;
            q.push_back(c);
        }
        while (!q.empty()) {
            auto cur = q.front();
            q.pop_front();
            auto it = adjacency_.find(cur);
            if (it == adjacency_.end()) continue;
            for (const auto& n : it->second) {
                if (forget_dist_.count(n)) continue;
                forget_dist_[n] = forget_dist_[cur] + 1;
                q.push_back(n);
            }
        }
    }
}

std::string SyntheticWorld::canonical(const std::string& name) const {
    auto it = norm_to_canonical_.find(text::normalize_name(name));
    return it == norm_to_canonical_.end() ? std::string{} : it->second;
}

bool SyntheticWorld::is_forget(const std::string& canonical_name) const {
    auto it = forget_dist_.find(canonical_name);
    return it != forget_dist_.end() && it->second == 0;
}

int SyntheticWorld::forget_distance(const std::string& canonical_name) const {
    auto it = forget_dist_.find(canonical_name);
    return it == forget_dist_.end() ? -1 : it->second;
}

std::optional<SyntheticWorld::Resolution> SyntheticWorld::resolve_question(
    const std::string& question) const {
    std::string q = question;
    const std::string scaffold_marker = "Answer the question by reasoning step by step.";
    if (q.rfind(scaffold_marker, 0) == 0) {
        auto solve = q.find("Now solve:\nQuestion: ");
        if (solve == std::string::npos) return std::nullopt;
        size_t start = solve + std::string("Now solve:\nQuestion: ").size();
        size_t end = q.find('\n', start);
        q = q.substr(start, end == std::string::npos ? std::string::npos : end - start);
    }

    std::set<std::string> involved;
    std::set<int> used_facts;
    std::set<std::string> answers;
    int hops = 0;

    auto spec = questions::parse(q);
    if (spec) {
        auto base = canonical(spec->base_entity);
        if (base.empty()) return std::nullopt;
        std::set<std::string> cur{base};
        involved.insert(base);
        for (const auto& step : spec->steps) {
            std::set<std::string> next;
            for (size_t i = 0; i < spec_.facts.size(); ++i) {
                const auto& f = spec_.facts[i];
                if (f.relation != text::normalize_relation(step.relation)) continue;
                auto s = canonical(f.subject), o = canonical(f.object);
                const std::string& known = step.inverted ? o : s;
                const std::string& unknown = step.inverted ? s : o;
                if (!cur.count(known)) continue;
                next.insert(unknown);
                used_facts.insert(static_cast<int>(i));
            }
            if (next.empty()) return std::nullopt;
            involved.insert(next.begin(), next.end());
            cur = std::move(next);
        }
        answers = cur;
        hops = spec->hops();
    } else {
        // Free-form fallback: a single known entity plus a known relation
        // identifying exactly one fact.
        auto nq = text::normalize_answer(q);
        std::set<std::string> mentioned;
        for (const auto& [norm, canon] : norm_to_canonical_)
            if (text::contains_token_phrase(nq, text::normalize_answer(canon)) ||
                text::contains_token_phrase(nq, norm))
                mentioned.insert(canon);
        // Drop entities that are substrings of a longer mention.
        for (auto it = mentioned.begin(); it != mentioned.end();) {
            bool shadowed = false;
            for (const auto& other : mentioned)
                if (other != *it && other.find(*it) != std::string::npos) shadowed = true;
            it = shadowed ? mentioned.erase(it) : ++it;
        }
        if (mentioned.size() != 1) return std::nullopt;
        const std::string entity = *mentioned.begin();
        std::vector<int> hits;
        for (size_t i = 0; i < spec_.facts.size(); ++i) {
            const auto& f = spec_.facts[i];
            if (!text::contains_token_phrase(nq, text::normalize_answer(f.relation))) continue;
            if (canonical(f.subject) == entity || canonical(f.object) == entity)
                hits.push_back(static_cast<int>(i));
        }
        if (hits.size() != 1) return std::nullopt;
        const auto& f = spec_.facts[hits[0]];
        auto s = canonical(f.subject), o = canonical(f.object);
        answers.insert(s == entity ? o : s);
        involved = {s, o};
        used_facts = {hits[0]};
        hops = 1;
    }

    Resolution r;
    r.answer = *answers.begin();
    r.hops = hops;
    for (int idx : used_facts)
        if (spec_.ignorance.count(idx)) r.uses_ignorant_fact = true;
    if (profile_) {
        for (const auto& e : involved) {
            if (is_forget(e)) r.through_forget = true;
            int d = forget_distance(e);
            if (d >= 0 && (r.forget_distance < 0 || d < r.forget_distance))
                r.forget_distance = d;
        }
    }
    return r;
}

bool SyntheticWorld::blocked(const std::string& probe_text, const Resolution& r) const {
    if (!profile_) return false;
    double p = 0.0;
    if (r.through_forget) {
        auto it = profile_->p_block_by_hops.find(r.hops);
        if (it != profile_->p_block_by_hops.end()) p = it->second;
    } else if (r.forget_distance >= 1 && r.forget_distance <= profile_->collateral_radius) {
        p = profile_->p_collateral;
    }
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    double u = text::hash_to_unit(
        text::mix64(text::fnv1a64(probe_text) ^ text::mix64(profile_->rng_seed)));
    return u < p;
}

std::string SyntheticWorld::respond(const std::string& prompt) const {
    // Elicitation step 1: question generation.
    const std::string qgen = "Generate a list of diverse questions regarding the entity '";
    if (prompt.rfind(qgen, 0) == 0) {
        auto end = prompt.find('\'', qgen.size());
        if (end == std::string::npos) return kRefusal;
        std::string entity = canonical(prompt.substr(qgen.size(), end - qgen.size()));
        if (entity.empty()) return kRefusal;
        std::ostringstream out;
        out << "1. Who or what is " << entity << "?\n"
            << "2. What are the key facts and relationships involving " << entity << "?\n"
            << "3. Which entities is " << entity << " most closely connected to?";
        return out.str();
    }

    // Elicitation step 2: answering about an entity.
    const std::string ans = "Answer each of the following questions about '";
    if (prompt.rfind(ans, 0) == 0) {
        auto end = prompt.find('\'', ans.size());
        if (end == std::string::npos) return kRefusal;
        std::string entity = canonical(prompt.substr(ans.size(), end - ans.size()));
        if (entity.empty()) return kRefusal;
        std::ostringstream out;
        bool any = false;
        for (size_t i = 0; i < spec_.facts.size(); ++i) {
            const auto& f = spec_.facts[i];
            if (spec_.ignorance.count(static_cast<int>(i))) continue;
            if (canonical(f.subject) != entity && canonical(f.object) != entity) continue;
            out << "\"" << f.subject << "\" " << f.relation << " \"" << f.object << "\".\n";
            any = true;
        }
        return any ? out.str() : std::string(kRefusal);
    }

    // Triplet extraction over elicited text.
    if (prompt.rfind("In a knowledge graph, entities represent", 0) == 0) {
        auto start = prompt.find("Text: \"");
        auto last = prompt.rfind('"');
        if (start == std::string::npos || last <= start + 7) return "";
        std::string body = prompt.substr(start + 7, last - start - 7);
        std::ostringstream out;
        std::istringstream lines(body);
        std::string line;
        while (std::getline(lines, line)) {
            size_t p = 0;
            auto s = next_quoted(line, p);
            if (!s) continue;
            auto gap_start = p;
            auto o_open = line.find('"', p);
            if (o_open == std::string::npos) continue;
            std::string rel = text::trim(line.substr(gap_start, o_open - gap_start));
            p = o_open;
            auto o = next_quoted(line, p);
            if (!o || rel.empty()) continue;
            out << "(\"" << *s << "\", \"" << rel << "\", \"" << *o << "\")\n";
        }
        return out.str();
    }

    // Relevance judging.
    if (prompt.rfind("Rate the relevance", 0) == 0) {
        auto qpos = prompt.find("Query: ");
        if (qpos == std::string::npos) return "0";
        auto triple = parse_paren_triple(prompt, prompt.find("Triple:"));
        if (!triple) return "0";
        auto s = canonical((*triple)[0]);
        auto r = text::normalize_relation((*triple)[1]);
        auto o = canonical((*triple)[2]);
        for (const auto& f : spec_.facts)
            if (canonical(f.subject) == s && f.relation == r && canonical(f.object) == o)
                return "10";
        return "0";
    }

    // Forget-expectation judging.
    const std::string fj = "If all knowledge of \"";
    if (prompt.rfind(fj, 0) == 0) {
        size_t p = fj.size() - 1;
        auto seed = next_quoted(prompt, p);
        auto triple = parse_paren_triple(prompt, p);
        if (!seed || !triple) return "No";
        auto sc = canonical(*seed);
        if (sc.empty()) return "No";
        return (canonical((*triple)[0]) == sc || canonical((*triple)[2]) == sc) ? "Yes" : "No";
    }

    // Alias resolution.
    if (prompt.rfind("Is \"", 0) == 0 && prompt.find("\" the same as \"") != std::string::npos) {
        size_t p = 0;
        auto a = next_quoted(prompt, p);
        auto b = next_quoted(prompt, p);
        if (!a || !b) return "No";
        auto ca = canonical(*a);
        return (!ca.empty() && ca == canonical(*b)) ? "Yes" : "No";
    }

    // Benchmark key extraction.
    if (prompt.rfind("Extract the key entity and relation", 0) == 0) {
        auto qpos = prompt.find("Question: \"");
        auto last = prompt.rfind('"');
        if (qpos == std::string::npos || last <= qpos + 11) return "UNPARSEABLE";
        std::string q = prompt.substr(qpos + 11, last - qpos - 11);
        auto spec = questions::parse(q);
        if (!spec || spec->steps.size() != 1) return "UNPARSEABLE";
        return spec->base_entity + " | " + spec->steps[0].relation;
    }

    // Probe questions (plain, decomposed, or free-form).
    auto res = resolve_question(prompt);
    if (!res || res->uses_ignorant_fact) return kRefusal;
    if (profile_ && blocked(prompt, *res)) return kRefusal;
    return res->answer;
}

ScoreReport expected_scores(const SyntheticWorld& unlearned_world, const Manifest& manifest,
                            const std::vector<Probe>& probes, const std::string& model_label) {
    std::map<std::string, const Probe*> by_id;
    for (const auto& p : probes) by_id[p.id] = &p;

    std::map<ProbeKind, std::pair<int, int>> counts;
    for (const auto& [kind_name, ids] : manifest.kinds) {
        ProbeKind kind = probe_kind_from_string(kind_name);
        for (const auto& id : ids) {
            auto it = by_id.find(id);
            if (it == by_id.end())
                throw std::runtime_error("expected_scores: manifest probe missing: " + id);
            const Probe& p = *it->second;
            auto res = unlearned_world.resolve_question(p.question);
            if (!res)
                throw std::runtime_error("expected_scores: world cannot resolve probe " + id +
                                         " (manifest/world mismatch)");
            bool correct = !res->uses_ignorant_fact && !unlearned_world.blocked(p.question, *res);
            auto& [c, t] = counts[kind];
            ++t;
            if (correct) ++c;
        }
    }
    return aggregate_scores(model_label, counts);
}

std::string FaultInjectingModel::respond(const std::string& prompt) const {
    int attempt;
    {
        std::lock_guard<std::mutex> lk(mu_);
        attempt = attempts_[prompt]++;
    }
    uint64_t h = text::mix64(text::fnv1a64(prompt) ^ text::mix64(seed_ + 0x9e37 * attempt));
    if (text::hash_to_unit(h) < fail_rate_)
        throw CompletionError(CompletionErrorCode::transport, "injected transport fault");
    return inner_->respond(prompt);
}

WorldSpec random_world(uint64_t seed, int n_facts) {
    std::mt19937_64 rng(seed);
    static const std::vector<std::string> relations = {
        "wrote", "lives in", "spouse of", "works at", "born in",
        "part of", "leader of", "created", "member of", "located in"};

    WorldSpec w;
    std::vector<std::string> entities{"seed person " + std::to_string(seed % 1000)};
    w.seeds = {entities[0]};
    std::set<std::string> fact_keys;

    int next_entity = 0;
    while (static_cast<int>(w.facts.size()) < n_facts) {
        bool grow = entities.size() < 4 || rng() % 3 != 0;
        std::string a = entities[rng() % entities.size()];
        std::string b;
        if (grow) {
            b = "entity " + std::to_string(next_entity++);
            entities.push_back(b);
        } else {
            b = entities[rng() % entities.size()];
            if (b == a) continue;
        }
        const std::string& rel = relations[rng() % relations.size()];
        bool flip = rng() % 2 == 0;
        WorldFact f{flip ? b : a, rel, flip ? a : b};
        if (!fact_keys.insert(f.subject + "|" + f.relation + "|" + f.object).second) continue;
        w.facts.push_back(std::move(f));
    }
    for (const auto& e : entities) {
        if (rng() % 5 == 0) w.aliases[e] = {e, e + " alt"};
    }
    w.validate();
    return w;
}

}  // namespace kgprobe
