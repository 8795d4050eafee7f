#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "kgprobe/gateway.hpp"
#include "kgprobe/probes.hpp"
#include "kgprobe/scorer.hpp"

namespace kgprobe {

struct WorldFact {
    std::string subject;
    std::string relation;  // normalized on load
    std::string object;
};

struct WorldSpec {
    std::vector<WorldFact> facts;
    // canonical name -> full surface-form set (canonical included)
    std::map<std::string, std::set<std::string>> aliases;
    std::vector<std::string> seeds;   // canonical names
    std::set<int> ignorance;          // fact indices the pre-unlearning model cannot answer

    void validate() const;            // throws on violations
    nlohmann::json to_json() const;
    static WorldSpec from_json(const nlohmann::json& j);
    static WorldSpec load(const std::string& path);
};

// Seeded generator for property tests: `n_facts` facts connected around one
// seed entity, with a few alias groups.
WorldSpec random_world(uint64_t seed, int n_facts);

struct ForgettingProfile {
    std::set<std::string> forget_entities;
    std::map<int, double> p_block_by_hops;  // hop count -> blocking probability
    int collateral_radius = 0;
    double p_collateral = 0.0;
    uint64_t rng_seed = 0;

    nlohmann::json to_json() const;
    static ForgettingProfile from_json(const nlohmann::json& j);
    static ForgettingProfile load(const std::string& path);
};

// Deterministic model over an explicit fact base. Recognizes the framework's
// prompt shapes (elicit, extract, relevance, alias, forget judgement, probe
// questions, key extraction); anything else gets the refusal sentinel.
class SyntheticWorld : public SyntheticModel {
  public:
    static constexpr const char* kRefusal = "I don't have information about that.";

    explicit SyntheticWorld(WorldSpec spec,
                            std::optional<ForgettingProfile> profile = std::nullopt);

    std::string respond(const std::string& prompt) const override;

    struct Resolution {
        std::string answer;         // canonical name
        int hops = 1;
        bool through_forget = false;
        int forget_distance = -1;   // min node distance to a forget entity; -1 unknown
        bool uses_ignorant_fact = false;
    };
    // Resolves a probe question (scaffolded or not) against the fact base.
    std::optional<Resolution> resolve_question(const std::string& question) const;

    // Blocking decision; pure in (probe text, profile rng_seed).
    bool blocked(const std::string& probe_text, const Resolution& r) const;

    const WorldSpec& world() const { return spec_; }
    const std::optional<ForgettingProfile>& profile() const { return profile_; }

  private:
    std::string canonical(const std::string& name) const;  // alias-aware; "" if unknown
    bool is_forget(const std::string& canonical_name) const;
    int forget_distance(const std::string& canonical_name) const;

    WorldSpec spec_;
    std::optional<ForgettingProfile> profile_;
    std::map<std::string, std::string> norm_to_canonical_;
    std::map<std::string, std::set<std::string>> adjacency_;  // canonical graph
    std::map<std::string, int> forget_dist_;
};

// Exhaustive replay of the blocking function over the manifest's sampled
// probes: the exact ScoreReport the pipeline must reproduce.
ScoreReport expected_scores(const SyntheticWorld& unlearned_world, const Manifest& manifest,
                            const std::vector<Probe>& probes, const std::string& model_label);

// Wraps a model with deterministic transport failures, for budget-safety
// tests. The t-th call for a given prompt fails iff its seeded hash falls
// below fail_rate.
class FaultInjectingModel : public SyntheticModel {
  public:
    FaultInjectingModel(std::shared_ptr<const SyntheticModel> inner, double fail_rate,
                        uint64_t seed)
        : inner_(std::move(inner)), fail_rate_(fail_rate), seed_(seed) {}
    std::string respond(const std::string& prompt) const override;

  private:
    std::shared_ptr<const SyntheticModel> inner_;
    double fail_rate_;
    uint64_t seed_;
    mutable std::mutex mu_;
    mutable std::map<std::string, int> attempts_;
};

}  // namespace kgprobe
