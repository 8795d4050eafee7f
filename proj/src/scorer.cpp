#include "kgprobe/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kgprobe/text.hpp"

namespace kgprobe {

nlohmann::json GradedAnswer::to_json() const {
    return {{"probe_id", probe_id},
            {"raw_answer", raw_answer},
            {"correct", correct},
            {"grader", grader}};
}

GradedAnswer grade(const std::vector<std::string>& expected, const std::string& raw,
                   ModelEndpoint* judge) {
    GradedAnswer g;
    g.raw_answer = raw;
    g.grader = "string_match";
    std::string haystack = text::normalize_answer(raw);
    for (const auto& e : expected) {
        std::string needle = text::normalize_answer(e);
        if (!needle.empty() && text::contains_token_phrase(haystack, needle)) {
            g.correct = true;
            return g;
        }
    }
    if (judge && !expected.empty()) {
        std::string prompt =
            "Does the response below state the answer \"" + expected.front() +
            "\"? Reply Yes or No.\nResponse: \"" + raw + "\"";
        std::string verdict = text::lower(text::trim(judge->complete(prompt)));
        if (verdict.rfind("yes", 0) == 0) {
            g.correct = true;
            g.grader = "judge";
        }
    }
    return g;
}

nlohmann::json ScoreReport::to_json() const {
    return {{"model_label", model_label},
            {"acc", acc},
            {"forget_score", forget_score},
            {"retain_score", retain_score},
            {"overall", overall},
            {"n_per_kind", n_per_kind}};
}

ScoreReport ScoreReport::from_json(const nlohmann::json& j) {
    ScoreReport r;
    r.model_label = j.at("model_label").get<std::string>();
    r.acc = j.at("acc").get<std::map<std::string, double>>();
    r.forget_score = j.at("forget_score").get<double>();
    r.retain_score = j.at("retain_score").get<double>();
    r.overall = j.at("overall").get<double>();
    r.n_per_kind = j.value("n_per_kind", std::map<std::string, int>{});
    return r;
}

double harmonic_overall(double forget_score, double retain_score) {
    double a = 1.0 - forget_score;
    double b = retain_score;
    if (a + b == 0.0) return 0.0;
    return 2.0 * a * b / (a + b);
}

namespace {

// Mean accuracy over the kinds present in `counts`; absent kinds are skipped
// (strict mode throws instead).
double component_mean(const std::map<ProbeKind, std::pair<int, int>>& counts,
                      const std::vector<ProbeKind>& kinds, bool strict, const char* label) {
    double sum = 0.0;
    int present = 0;
    for (ProbeKind k : kinds) {
        auto it = counts.find(k);
        if (it == counts.end() || it->second.second == 0) {
            std::string msg = std::string("score: no probes for ") + to_string(k) +
                              " while computing " + label;
            if (strict) throw std::runtime_error(msg);
            std::cerr << "warning: " << msg << "\n";
            continue;
        }
        sum += static_cast<double>(it->second.first) / it->second.second;
        ++present;
    }
    return present == 0 ? 0.0 : sum / present;
}

}  // namespace

ScoreReport aggregate_scores(const std::string& model_label,
                             const std::map<ProbeKind, std::pair<int, int>>& counts,
                             bool strict) {
    ScoreReport r;
    r.model_label = model_label;
    for (const auto& [kind, ct] : counts) {
        r.n_per_kind[to_string(kind)] = ct.second;
        if (ct.second > 0) r.acc[to_string(kind)] = static_cast<double>(ct.first) / ct.second;
    }
    r.forget_score = component_mean(
        counts, {ProbeKind::forget_1hop, ProbeKind::forget_2hop, ProbeKind::forget_3hop}, strict,
        "forget_score");
    r.retain_score = component_mean(
        counts, {ProbeKind::retain_1away, ProbeKind::retain_2away, ProbeKind::retain_relation},
        strict, "retain_score");
    r.overall = harmonic_overall(r.forget_score, r.retain_score);
    return r;
}

PercentScores scores_from_percent_accuracies(const std::array<double, 6>& acc) {
    PercentScores s;
    s.forget = (acc[0] + acc[1] + acc[2]) / 3.0;
    s.retain = (acc[3] + acc[4] + acc[5]) / 3.0;
    double a = 100.0 - s.forget;
    s.overall = (a + s.retain == 0.0) ? 0.0 : 2.0 * a * s.retain / (a + s.retain);
    return s;
}

EvaluationResult evaluate(ModelEndpoint& endpoint, const std::vector<Probe>& sampled,
                          const std::string& model_label, ModelEndpoint* judge, bool strict) {
    EvaluationResult ev;
    std::map<ProbeKind, std::pair<int, int>> counts;
    for (const auto& p : sampled) {
        if (!p.prefilter_passed)
            throw std::invalid_argument("evaluate: probe did not pass the prefilter: " + p.id);
        std::string raw = endpoint.complete(p.question);
        GradedAnswer g = grade(p.expected, raw, judge);
        g.probe_id = p.id;
        auto& [c, t] = counts[p.kind];
        ++t;
        if (g.correct) ++c;
        ev.graded.push_back(std::move(g));
    }
    ev.report = aggregate_scores(model_label, counts, strict);
    return ev;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
    size_t n = v.size();
    std::vector<size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        i = j + 1;
    }
    return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    size_t n = x.size();
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

double betacf(double a, double b, double x) {
    const int kMaxIter = 200;
    const double kEps = 3e-14, kFpMin = 1e-300;
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0, d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

double incbeta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                b * std::log(1.0 - x);
    double front = std::exp(ln);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("spearman: length mismatch");
    if (a.size() < 3) throw std::invalid_argument("spearman: need at least 3 observations");
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
    };
    if (constant(a) || constant(b))
        throw std::invalid_argument("spearman: constant input vector");
    return pearson(average_ranks(a), average_ranks(b));
}

double spearman_pvalue(double rho, int n) {
    if (n < 3) throw std::invalid_argument("spearman_pvalue: need n >= 3");
    if (std::fabs(rho) >= 1.0) return 0.0;
    double df = n - 2;
    double t2 = rho * rho * df / (1.0 - rho * rho);
    // Two-sided p for Student's t via the regularized incomplete beta.
    return incbeta(df / 2.0, 0.5, df / (df + t2));
}

std::string compare_markdown(const std::vector<nlohmann::json>& results) {
    static const std::vector<std::pair<std::string, std::string>> cols = {
        {"forget_1hop", "1-hop"},       {"forget_2hop", "2-hop"},
        {"forget_3hop", "3-hop"},       {"forget_alias", "Alias"},
        {"forget_decomposed", "Decomp."}, {"retain_1away", "1-away"},
        {"retain_2away", "2-away"},     {"retain_relation", "Relation"}};

    std::ostringstream out;
    out << "| Model |";
    for (const auto& [_, label] : cols) out << " " << label << " |";
    out << " Forget | Retain | Overall |\n|---|";
    for (size_t i = 0; i < cols.size() + 3; ++i) out << "---|";
    out << "\n";

    auto pct = [](double v) {
        std::ostringstream s;
        s.setf(std::ios::fixed);
        s.precision(1);
        s << v * 100.0;
        return s.str();
    };
    for (const auto& r : results) {
        ScoreReport rep = ScoreReport::from_json(r.at("report"));
        out << "| " << rep.model_label << " |";
        for (const auto& [kind, _] : cols) {
            auto it = rep.acc.find(kind);
            out << " " << (it == rep.acc.end() ? std::string("-") : pct(it->second)) << " |";
        }
        out << " " << pct(rep.forget_score) << " | " << pct(rep.retain_score) << " | "
            << pct(rep.overall) << " |\n";
    }
    return out.str();
}

nlohmann::json results_json(const std::string& model_label, const std::string& graph_hash,
                            const std::string& manifest_hash, const EvaluationResult& ev) {
    nlohmann::json graded = nlohmann::json::array();
    for (const auto& g : ev.graded) graded.push_back(g.to_json());
    return {{"model_label", model_label},
            {"graph_hash", graph_hash},
            {"manifest_hash", manifest_hash},
            {"report", ev.report.to_json()},
            {"graded", graded}};
}

}  // namespace kgprobe
