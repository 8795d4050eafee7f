#include "kgprobe/gateway.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <set>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "kgprobe/text.hpp"

namespace kgprobe {

namespace {

bool is_placeholder_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == ' ';
}

}  // namespace

std::string PromptTemplate::render(const std::map<std::string, std::string>& bindings) const {
    std::string out;
    out.reserve(body.size());
    size_t i = 0;
    while (i < body.size()) {
        if (body[i] != '{') {
            out.push_back(body[i++]);
            continue;
        }
        size_t close = body.find('}', i + 1);
        if (close == std::string::npos) {
            out.push_back(body[i++]);
            continue;
        }
        std::string key = body.substr(i + 1, close - i - 1);
        bool looks_like_placeholder =
            !key.empty() && std::all_of(key.begin(), key.end(), is_placeholder_char);
        if (!looks_like_placeholder) {
            out.push_back(body[i++]);
            continue;
        }
        auto it = bindings.find(key);
        if (it == bindings.end())
            throw std::invalid_argument("render: missing placeholder '" + key + "' in template " + name);
        out += text::trim(it->second);
        i = close + 1;
    }
    return out;
}

namespace templates {

const PromptTemplate& elicit() {
    static const PromptTemplate t{
        "elicit",
        "Generate a list of diverse questions regarding the entity '{entity}'. Each question should cover a different aspect:\n"
        "1. Basic introduction: Who is {entity}?\n"
        "2. Key concepts related to {entity}: What are the main concepts or characteristics associated with {entity}?\n"
        "3. Connections to related entities: What are the most significant relationships between {entity} and other related entities?\n"
        "4. Functional roles: What is the role or importance of {entity} in its field or domain?\n"
        "5. Lesser-known facts: What are some lesser-known or non-mainstream details about {entity}?\n"
        "6. Controversies or debates: Are there any controversies or debates surrounding {entity}?\n"
        "7. Future trends: How could {entity} evolve or influence future developments in its field?\n"
        "8. Historical significance: What has been the historical impact of {entity}?\n"
        "9. Comparison to similar entities: How does {entity} compare to similar entities in the same or different fields?\n"
        "10. Missing information: What information is missing or under-researched about {entity} that would help understand it better?\n"
        "\n"
        "Input: \"{entity}\"\n"
        "Provide the output as a list of questions."};
    return t;
}

const PromptTemplate& extract_triplets() {
    static const PromptTemplate t{
        "extract_triplets",
        "In a knowledge graph, entities represent real-world objects, concepts, or things.\n"
        "Valid entities are:\n"
        "- Specific and identifiable (e.g., names, places, distinct items).\n"
        "- Not overly abstract, repetitive, or general.\n"
        "- Relevant to a knowledge graph's structure.\n"
        "\n"
        "Extract all atomic facts from the input text.\n"
        "Output each atomic fact in the format: (subject, relationship, object), where:\n"
        "- Relationships and objects are concise, meaningful, and specific.\n"
        "- Longer pieces of text can be broken into multiple relationships.\n"
        "- For each fact, if applicable, create both relationships (e1, r1, e2) and (e2, r2, e1).\n"
        "\n"
        "Text: \"{text}\""};
    return t;
}

const PromptTemplate& relevance() {
    static const PromptTemplate t{
        "relevance",
        "Rate the relevance of the following triple to the initial query on a scale from 0 to 10.\n"
        "Query: \"{Seed Entity}\"\n"
        "Triple: (\"{entity}\", \"{relation}\", \"{obj}\")\n"
        "Provide only the number in response."};
    return t;
}

const PromptTemplate& alias() {
    static const PromptTemplate t{"alias", "Is \"{node}\" the same as \"{visited_node}\"?"};
    return t;
}

const PromptTemplate& judge() {
    static const PromptTemplate t{
        "judge",
        "If all knowledge of \"{seed}\" were removed from a model, would the fact "
        "(\"{subject}\", \"{relation}\", \"{object}\") be expected to be forgotten? "
        "Answer Yes or No."};
    return t;
}

const PromptTemplate& decompose() {
    static const PromptTemplate t{
        "decompose",
        "Answer the question by reasoning step by step.\n"
        "\n"
        "Example:\n"
        "Question: Who or what does the \"capital\" of \"France\" have as \"population\"?\n"
        "Step 1: The \"capital\" of \"France\" is \"Paris\".\n"
        "Step 2: \"Paris\" has \"population\" of about 2.1 million.\n"
        "Answer: 2.1 million\n"
        "\n"
        "Now solve:\n"
        "Question: {question}\n"
        "Think step by step, then give the final answer."};
    return t;
}

const PromptTemplate& by_name(const std::string& name) {
    if (name == "elicit") return elicit();
    if (name == "extract_triplets") return extract_triplets();
    if (name == "relevance") return relevance();
    if (name == "alias") return alias();
    if (name == "judge") return judge();
    if (name == "decompose") return decompose();
    throw std::invalid_argument("unknown template: " + name);
}

}  // namespace templates

std::optional<int> parse_relevance(const std::string& raw) {
    auto n = text::first_integer(raw);
    if (!n || *n < 0 || *n > 10) return std::nullopt;
    return n;
}

std::shared_ptr<ModelEndpoint> ModelEndpoint::remote(const std::string& base_url,
                                                     EndpointOptions opts) {
    auto ep = std::shared_ptr<ModelEndpoint>(new ModelEndpoint(std::move(opts)));
    ep->base_url_ = base_url;
    ep->load_cache();
    return ep;
}

std::shared_ptr<ModelEndpoint> ModelEndpoint::synthetic(
    std::shared_ptr<const SyntheticModel> model, EndpointOptions opts) {
    auto ep = std::shared_ptr<ModelEndpoint>(new ModelEndpoint(std::move(opts)));
    ep->model_ = std::move(model);
    ep->load_cache();
    return ep;
}

int ModelEndpoint::calls_used() const {
    std::lock_guard<std::mutex> lk(mu_);
    return calls_used_;
}

void ModelEndpoint::set_call_budget(std::optional<int> budget) {
    std::lock_guard<std::mutex> lk(mu_);
    opts_.call_budget = budget;
}

void ModelEndpoint::load_cache() {
    if (!opts_.cache_path) return;
    std::ifstream in(*opts_.cache_path);
    if (!in) return;
    std::string line;
    std::lock_guard<std::mutex> lk(mu_);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) continue;
        if (j.value("model_id", "") != opts_.model_id) continue;
        cache_[j.at("prompt_hash").get<std::string>()] =
            j.at("completion").get<std::string>();
    }
}

void ModelEndpoint::flush() const {}

void ModelEndpoint::set_observer(std::function<void(const std::string&)> fn) {
    std::lock_guard<std::mutex> lk(mu_);
    observer_ = std::move(fn);
}

void ModelEndpoint::append_cache_line(const std::string& prompt,
                                      const std::string& completion) const {
    if (!opts_.cache_path) return;
    std::ofstream out(*opts_.cache_path, std::ios::app);
    nlohmann::json j{{"prompt_hash", text::fnv1a64_hex(opts_.model_id + "\x1f" + prompt)},
                     {"model_id", opts_.model_id},
                     {"completion", completion}};
    out << j.dump() << "\n";
}

std::string ModelEndpoint::transport(const std::string& prompt) const {
    if (model_) return model_->respond(prompt);

    // Split origin and path prefix of the base URL.
    auto scheme_end = base_url_.find("://");
    if (scheme_end == std::string::npos)
        throw CompletionError(CompletionErrorCode::transport, "bad base_url: " + base_url_);
    auto path_start = base_url_.find('/', scheme_end + 3);
    std::string origin = path_start == std::string::npos ? base_url_ : base_url_.substr(0, path_start);
    std::string prefix = path_start == std::string::npos ? "" : base_url_.substr(path_start);
    if (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

    httplib::Client client(origin);
    client.set_connection_timeout(10);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (const char* key = std::getenv("KGPROBE_API_KEY"))
        headers.emplace("Authorization", std::string("Bearer ") + key);

    nlohmann::json body{{"model", opts_.model_id},
                        {"messages", {{{"role", "user"}, {"content", prompt}}}},
                        {"temperature", 0}};
    auto res = client.Post(prefix + "/chat/completions", headers, body.dump(),
                           "application/json");
    if (!res)
        throw CompletionError(CompletionErrorCode::transport,
                              "no response from " + origin);
    if (res->status < 200 || res->status >= 300)
        throw CompletionError(CompletionErrorCode::transport,
                              "http status " + std::to_string(res->status));
    auto j = nlohmann::json::parse(res->body, nullptr, false);
    if (j.is_discarded() || !j.contains("choices") || j["choices"].empty() ||
        !j["choices"][0].contains("message"))
        throw CompletionError(CompletionErrorCode::malformed_response,
                              "unexpected chat-completions payload");
    return j["choices"][0]["message"].value("content", "");
}

std::string ModelEndpoint::complete_uncached(const std::string& prompt) {
    int attempts = 0;
    int backoff = opts_.retry_backoff_ms;
    while (true) {
        ++attempts;
        try {
            return transport(prompt);
        } catch (const CompletionError& e) {
            if (e.code != CompletionErrorCode::transport || attempts >= opts_.retry_attempts)
                throw CompletionError(e.code, e.what(), attempts);
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff));
            backoff *= 2;
        }
    }
}

std::string ModelEndpoint::complete(const std::string& prompt) {
    const std::string key = text::fnv1a64_hex(opts_.model_id + "\x1f" + prompt);
    {
        std::unique_lock<std::mutex> lk(mu_);
        while (true) {
            auto hit = cache_.find(key);
            if (hit != cache_.end()) return hit->second;
            if (pending_.count(key)) {
                slot_cv_.wait(lk);
                continue;
            }
            if (opts_.call_budget && calls_used_ >= *opts_.call_budget)
                throw CompletionError(CompletionErrorCode::budget_exhausted,
                                      "call budget exhausted at " + std::to_string(calls_used_));
            if (in_flight_ >= opts_.max_in_flight) {
                slot_cv_.wait(lk);
                continue;
            }
            pending_.insert(key);
            ++in_flight_;
            ++calls_used_;  // reserved; refunded on failure
            break;
        }
    }

    std::string completion;
    try {
        completion = complete_uncached(prompt);
    } catch (...) {
        std::lock_guard<std::mutex> lk(mu_);
        pending_.erase(key);
        --in_flight_;
        --calls_used_;
        slot_cv_.notify_all();
        throw;
    }
    if (completion.size() > opts_.max_completion_chars)
        completion.resize(opts_.max_completion_chars);
    std::function<void(const std::string&)> observer;
    {
        std::lock_guard<std::mutex> lk(mu_);
        cache_[key] = completion;
        pending_.erase(key);
        --in_flight_;
        observer = observer_;
        slot_cv_.notify_all();
    }
    append_cache_line(prompt, completion);
    if (observer) observer(prompt);
    return completion;
}

}  // namespace kgprobe
