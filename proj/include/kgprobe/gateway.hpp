#pragma once

#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>

namespace kgprobe {

enum class CompletionErrorCode { budget_exhausted, transport, malformed_response };

struct CompletionError : std::runtime_error {
    CompletionErrorCode code;
    int attempts = 0;
    CompletionError(CompletionErrorCode c, const std::string& msg, int attempts_ = 0)
        : std::runtime_error(msg), code(c), attempts(attempts_) {}
};

struct PromptTemplate {
    std::string name;
    std::string body;

    // Deterministic substitution of {placeholder} occurrences. Throws
    // std::invalid_argument when any placeholder is left unbound.
    std::string render(const std::map<std::string, std::string>& bindings) const;
};

namespace templates {
const PromptTemplate& elicit();
const PromptTemplate& extract_triplets();
const PromptTemplate& relevance();
const PromptTemplate& alias();
const PromptTemplate& judge();
const PromptTemplate& decompose();
const PromptTemplate& by_name(const std::string& name);
}  // namespace templates

// First integer token in 0..10, else nullopt (callers treat as relevance 0).
std::optional<int> parse_relevance(const std::string& raw);

// A deterministic model implementation that endpoints can wrap in place of a
// remote server. Implementations must be safe for concurrent use.
class SyntheticModel {
  public:
    virtual ~SyntheticModel() = default;
    virtual std::string respond(const std::string& prompt) const = 0;
};

struct EndpointOptions {
    std::string model_id = "default";
    int max_in_flight = 1;
    std::optional<int> call_budget;
    std::optional<std::string> cache_path;  // append-only JSONL
    int retry_attempts = 3;
    int retry_backoff_ms = 1000;
    size_t max_completion_chars = 8192;
};

// Uniform black-box text interface with greedy decoding semantics: identical
// prompts always return the cached completion and consume no budget.
class ModelEndpoint {
  public:
    static std::shared_ptr<ModelEndpoint> remote(const std::string& base_url,
                                                 EndpointOptions opts = {});
    static std::shared_ptr<ModelEndpoint> synthetic(std::shared_ptr<const SyntheticModel> model,
                                                    EndpointOptions opts = {});

    std::string complete(const std::string& prompt);

    int calls_used() const;
    const EndpointOptions& options() const { return opts_; }
    void set_call_budget(std::optional<int> budget);

    void load_cache();              // from opts_.cache_path, if set
    void flush() const;             // no-op; writes are append-on-miss

    // Invoked once per billed (non-cached) call, after it succeeds.
    void set_observer(std::function<void(const std::string& prompt)> fn);

  private:
    ModelEndpoint(EndpointOptions opts) : opts_(std::move(opts)) {}
    std::string transport(const std::string& prompt) const;  // single attempt
    std::string complete_uncached(const std::string& prompt);
    void append_cache_line(const std::string& prompt, const std::string& completion) const;

    EndpointOptions opts_;
    std::string base_url_;
    std::shared_ptr<const SyntheticModel> model_;

    mutable std::mutex mu_;
    std::condition_variable slot_cv_;
    int in_flight_ = 0;
    int calls_used_ = 0;
    std::map<std::string, std::string> cache_;  // prompt hash -> completion
    std::set<std::string> pending_;             // hashes with a call in flight
    std::function<void(const std::string&)> observer_;
};

}  // namespace kgprobe
