#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace kgprobe::text {

std::string lower(std::string s);
std::string trim(const std::string& s);
std::string collapse_ws(const std::string& s);

// Case/whitespace normalization used for alias identity and node ids.
std::string normalize_name(const std::string& s);

// Relation labels: lowercase, collapse internal whitespace, strip trailing punctuation.
std::string normalize_relation(const std::string& s);

// Answer normalization for grading: lowercase, punctuation to spaces,
// leading articles dropped per token stream, whitespace collapsed.
std::string normalize_answer(const std::string& s);

// True when `needle` (already normalized) occurs in `haystack` (already
// normalized) on token boundaries.
bool contains_token_phrase(const std::string& haystack, const std::string& needle);

std::vector<std::string> split_tokens(const std::string& s);

uint64_t fnv1a64(const std::string& s);
std::string fnv1a64_hex(const std::string& s);

// splitmix64 finalizer, used to derive uniform [0,1) values from hashes.
uint64_t mix64(uint64_t x);
double hash_to_unit(uint64_t h);

double jaro_winkler(const std::string& a, const std::string& b);

// First integer token in the text, if any.
std::optional<int> first_integer(const std::string& s);

}  // namespace kgprobe::text
