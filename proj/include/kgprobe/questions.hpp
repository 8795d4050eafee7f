#pragma once

#include <optional>
#include <string>
#include <vector>

namespace kgprobe::questions {

// A question is a chain of hops applied to a base entity, rendered with a
// small deterministic grammar:
//   question  := Who or what does <expr> have as "<relation>"?     (forward)
//              | Who or what has <expr> as "<relation>"?           (inverted)
//   expr      := "<name>"
//              | the "<relation>" of <expr>                        (forward)
//              | the one that has <expr> as "<relation>"           (inverted)
// A forward hop names the object of (subject, relation, object); an inverted
// hop names the subject given the object. Steps run innermost to outermost,
// the last step being the outer question.
struct Step {
    std::string relation;
    bool inverted = false;
};

struct QuestionSpec {
    std::string base_entity;
    std::vector<Step> steps;  // non-empty

    int hops() const { return static_cast<int>(steps.size()); }
};

std::string render(const QuestionSpec& q);

// Strict inverse of render(); nullopt for anything outside the grammar.
std::optional<QuestionSpec> parse(const std::string& question);

}  // namespace kgprobe::questions
