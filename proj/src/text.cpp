#include "kgprobe/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace kgprobe::text {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::string trim(const std::string& s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string collapse_ws(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_name(const std::string& s) {
    std::string cleaned;
    cleaned.reserve(s.size());
    for (char c : s)
        if (c != '"') cleaned.push_back(c);
    return collapse_ws(lower(trim(cleaned)));
}

std::string normalize_relation(const std::string& s) {
    std::string r = collapse_ws(lower(trim(s)));
    while (!r.empty() && std::ispunct(static_cast<unsigned char>(r.back()))) r.pop_back();
    return trim(r);
}

std::vector<std::string> split_tokens(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(tok);
    return out;
}

std::string normalize_answer(const std::string& s) {
    std::string spaced;
    spaced.reserve(s.size());
    for (char c : lower(s)) {
        if (std::ispunct(static_cast<unsigned char>(c)))
            spaced.push_back(' ');
        else
            spaced.push_back(c);
    }
    std::string out;
    for (const auto& tok : split_tokens(spaced)) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

bool contains_token_phrase(const std::string& haystack, const std::string& needle) {
    if (needle.empty()) return false;
    size_t pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        bool left_ok = pos == 0 || haystack[pos - 1] == ' ';
        size_t end = pos + needle.size();
        bool right_ok = end == haystack.size() || haystack[end] == ' ';
        if (left_ok && right_ok) return true;
        ++pos;
    }
    return false;
}

uint64_t fnv1a64(const std::string& s) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& s) {
    static const char* digits = "0123456789abcdef";
    uint64_t h = fnv1a64(s);
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double hash_to_unit(uint64_t h) {
    return static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // 53-bit mantissa
}

static double jaro(const std::string& a, const std::string& b) {
    if (a.empty() || b.empty()) return a == b ? 1.0 : 0.0;
    const int la = static_cast<int>(a.size()), lb = static_cast<int>(b.size());
    const int window = std::max(0, std::max(la, lb) / 2 - 1);
    std::vector<bool> am(la, false), bm(lb, false);
    int matches = 0;
    for (int i = 0; i < la; ++i) {
        int lo = std::max(0, i - window), hi = std::min(lb - 1, i + window);
        for (int j = lo; j <= hi; ++j) {
            if (bm[j] || a[i] != b[j]) continue;
            am[i] = bm[j] = true;
            ++matches;
            break;
        }
    }
    if (matches == 0) return 0.0;
    int t = 0, j = 0;
    for (int i = 0; i < la; ++i) {
        if (!am[i]) continue;
        while (!bm[j]) ++j;
        if (a[i] != b[j]) ++t;
        ++j;
    }
    double m = matches;
    return (m / la + m / lb + (m - t / 2.0) / m) / 3.0;
}

double jaro_winkler(const std::string& a, const std::string& b) {
    double j = jaro(a, b);
    int prefix = 0;
    for (size_t i = 0; i < std::min({a.size(), b.size(), size_t{4}}); ++i) {
        if (a[i] != b[i]) break;
        ++prefix;
    }
    return j + prefix * 0.1 * (1.0 - j);
}

std::optional<int> first_integer(const std::string& s) {
    for (size_t i = 0; i < s.size(); ++i) {
        if (std::isdigit(static_cast<unsigned char>(s[i]))) {
            size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j - i > 9) return std::nullopt;
            return std::stoi(s.substr(i, j - i));
        }
    }
    return std::nullopt;
}

}  // namespace kgprobe::text
