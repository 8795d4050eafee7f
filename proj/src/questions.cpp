#include "kgprobe/questions.hpp"

namespace kgprobe::questions {

namespace {

std::string render_expr(const QuestionSpec& q, size_t depth) {
    // depth = number of descriptor steps applied (steps[0..depth-1]).
    if (depth == 0) return "\"" + q.base_entity + "\"";
    const Step& s = q.steps[depth - 1];
    std::string inner = render_expr(q, depth - 1);
    if (s.inverted) return "the one that has " + inner + " as \"" + s.relation + "\"";
    return "the \"" + s.relation + "\" of " + inner;
}

struct Cursor {
    const std::string& s;
    size_t pos = 0;

    bool eat(const std::string& lit) {
        if (s.compare(pos, lit.size(), lit) != 0) return false;
        pos += lit.size();
        return true;
    }
    std::optional<std::string> quoted() {
        if (pos >= s.size() || s[pos] != '"') return std::nullopt;
        size_t close = s.find('"', pos + 1);
        if (close == std::string::npos) return std::nullopt;
        std::string out = s.substr(pos + 1, close - pos - 1);
        pos = close + 1;
        return out;
    }
};

// Parses an expression, appending descriptor steps innermost-first.
bool parse_expr(Cursor& c, QuestionSpec& out) {
    if (c.eat("the one that has ")) {
        if (!parse_expr(c, out)) return false;
        if (!c.eat(" as ")) return false;
        auto r = c.quoted();
        if (!r) return false;
        out.steps.push_back({*r, true});
        return true;
    }
    if (c.s.compare(c.pos, 5, "the \"") == 0) {
        c.pos += 4;
        auto r = c.quoted();
        if (!r) return false;
        if (!c.eat(" of ")) return false;
        if (!parse_expr(c, out)) return false;
        out.steps.push_back({*r, false});
        return true;
    }
    auto name = c.quoted();
    if (!name) return false;
    out.base_entity = *name;
    return true;
}

}  // namespace

std::string render(const QuestionSpec& q) {
    const Step& outer = q.steps.back();
    std::string expr = render_expr(q, q.steps.size() - 1);
    if (outer.inverted)
        return "Who or what has " + expr + " as \"" + outer.relation + "\"?";
    return "Who or what does " + expr + " have as \"" + outer.relation + "\"?";
}

std::optional<QuestionSpec> parse(const std::string& question) {
    Cursor c{question};
    QuestionSpec out;
    bool inverted;
    if (c.eat("Who or what does "))
        inverted = false;
    else if (c.eat("Who or what has "))
        inverted = true;
    else
        return std::nullopt;

    if (!parse_expr(c, out)) return std::nullopt;
    if (inverted) {
        if (!c.eat(" as ")) return std::nullopt;
    } else {
        if (!c.eat(" have as ")) return std::nullopt;
    }
    auto r = c.quoted();
    if (!r) return std::nullopt;
    if (!c.eat("?") || c.pos != question.size()) return std::nullopt;
    out.steps.push_back({*r, inverted});
    if (out.steps.empty()) return std::nullopt;
    return out;
}

}  // namespace kgprobe::questions
