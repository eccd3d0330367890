#include "kgte/parsing.hpp"

#include <optional>
#include <unordered_set>

namespace kgte {

namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string_view strip_marker(std::string_view s) {
    if (s.starts_with('-') || s.starts_with('*')) return trim(s.substr(1));
    std::size_t digits = 0;
    while (digits < s.size() && s[digits] >= '0' && s[digits] <= '9') ++digits;
    if (digits > 0 && digits < s.size() && (s[digits] == '.' || s[digits] == ')')) {
        return trim(s.substr(digits + 1));
    }
    return s;
}

std::optional<Triplet> parse_tuple(std::string_view line) {
    if (line.size() < 2 || line.front() != '(' || line.back() != ')') return std::nullopt;
    const auto inner = line.substr(1, line.size() - 2);
    std::size_t commas[2];
    std::size_t n_commas = 0;
    int depth = 0;
    for (std::size_t i = 0; i < inner.size(); ++i) {
        const char c = inner[i];
        if (c == '(') {
            ++depth;
        } else if (c == ')') {
            if (--depth < 0) return std::nullopt;
        } else if (c == ',' && depth == 0) {
            if (n_commas == 2) return std::nullopt;
            commas[n_commas++] = i;
        }
    }
    if (depth != 0 || n_commas != 2) return std::nullopt;

    Triplet t{normalize_surface(inner.substr(0, commas[0])),
              normalize_surface(inner.substr(commas[0] + 1, commas[1] - commas[0] - 1)),
              normalize_surface(inner.substr(commas[1] + 1))};
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) return std::nullopt;
    return t;
}

}  // namespace

ParseOutcome parse_triplets(std::string_view raw, std::size_t max_triplets) {
    ParseOutcome outcome;
    std::unordered_set<Triplet> seen;
    while (!raw.empty()) {
        const auto eol = raw.find('\n');
        const auto line = trim(raw.substr(0, eol));
        raw = eol == std::string_view::npos ? std::string_view{} : raw.substr(eol + 1);
        if (line.empty()) continue;

        auto triplet = parse_tuple(strip_marker(line));
        if (!triplet) {
            ++outcome.malformed_lines;
            continue;
        }
        if (seen.contains(*triplet)) continue;
        if (outcome.triplets.size() >= max_triplets) {
            outcome.truncated_to_max = true;
            continue;
        }
        seen.insert(*triplet);
        outcome.triplets.push_back(std::move(*triplet));
    }
    return outcome;
}

}  // namespace kgte
