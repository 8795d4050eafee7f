#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kgprobe/budget.hpp"
#include "kgprobe/pipeline.hpp"
#include "kgprobe/questions.hpp"
#include "kgprobe/scorer.hpp"
#include "kgprobe/text.hpp"
#include "kgprobe/world.hpp"

namespace py = pybind11;
using namespace kgprobe;

PYBIND11_MODULE(_kgprobe, m) {
    m.doc() = "Knowledge-graph probing toolkit for evaluating machine unlearning";

    m.def(
        "estimate_totals",
        [](int b0, double alpha, int d_max, int k) {
            ExpansionBudget b{b0, alpha, d_max, k};
            b.validate();
            return estimate_totals(b);
        },
        py::arg("b0"), py::arg("alpha"), py::arg("d_max"), py::arg("k"),
        "Expected node total and call total for an expansion budget.");

    m.def(
        "level_width",
        [](int b0, double alpha, int d_max, int k, int depth) {
            ExpansionBudget b{b0, alpha, d_max, k};
            b.validate();
            return b.level_width(depth);
        },
        py::arg("b0"), py::arg("alpha"), py::arg("d_max"), py::arg("k"), py::arg("depth"),
        "Branching width at a given depth (b0 * alpha^depth, floored, min 1).");

    m.def("harmonic_overall", &harmonic_overall, py::arg("forget_score"), py::arg("retain_score"),
          "Harmonic mean of (1 - forget_score) and retain_score.");

    m.def(
        "scores_from_accuracies",
        [](const std::array<double, 6>& acc) {
            auto s = scores_from_percent_accuracies(acc);
            return py::dict(py::arg("forget") = s.forget, py::arg("retain") = s.retain,
                            py::arg("overall") = s.overall);
        },
        py::arg("acc"),
        "Forget/retain/overall scores (percent scale) from the six probe-kind "
        "accuracies: 1-hop, 2-hop, 3-hop forget; 1-away, 2-away, relation retention.");

    m.def("spearman", &spearman, py::arg("a"), py::arg("b"),
          "Spearman rank correlation with average ranks for ties.");
    m.def("spearman_pvalue", &spearman_pvalue, py::arg("rho"), py::arg("n"),
          "Two-sided p-value for a Spearman rho via the t approximation.");

    m.def(
        "grade",
        [](const std::vector<std::string>& expected, const std::string& raw) {
            auto g = kgprobe::grade(expected, raw);
            return py::dict(py::arg("correct") = g.correct, py::arg("grader") = g.grader);
        },
        py::arg("expected"), py::arg("raw"),
        "String-match grading of a raw answer against acceptable surface forms.");

    m.def("normalize_name", &text::normalize_name, py::arg("name"));
    m.def("normalize_relation", &text::normalize_relation, py::arg("relation"));

    m.def(
        "render_question",
        [](const std::string& base_entity,
           const std::vector<std::pair<std::string, bool>>& steps) {
            questions::QuestionSpec spec;
            spec.base_entity = base_entity;
            for (const auto& [rel, inverted] : steps) spec.steps.push_back({rel, inverted});
            return questions::render(spec);
        },
        py::arg("base_entity"), py::arg("steps"),
        "Render a probe question from a base entity and (relation, inverted) hops.");

    m.def(
        "parse_question",
        [](const std::string& question) -> py::object {
            auto spec = questions::parse(question);
            if (!spec) return py::none();
            std::vector<std::pair<std::string, bool>> steps;
            for (const auto& s : spec->steps) steps.emplace_back(s.relation, s.inverted);
            return py::dict(py::arg("base_entity") = spec->base_entity,
                            py::arg("steps") = steps);
        },
        py::arg("question"), "Strict inverse of render_question; None when off-grammar.");

    m.def(
        "random_world",
        [](uint64_t seed, int n_facts) {
            return kgprobe::random_world(seed, n_facts).to_json().dump();
        },
        py::arg("seed"), py::arg("n_facts"),
        "Seeded synthetic world as a JSON string, usable as a synthetic endpoint.");

    m.def(
        "run_pipeline",
        [](const std::string& config_path, const std::set<std::string>& stages) {
            RunConfig cfg = RunConfig::from_file(config_path);
            std::ostringstream log;
            int rc = run_pipeline(cfg, stages, log);
            return py::make_tuple(rc, log.str());
        },
        py::arg("config_path"), py::arg("stages") = std::set<std::string>{},
        "Run the pipeline from a config file; returns (exit_code, log_text).");
}
