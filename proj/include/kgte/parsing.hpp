#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "kgte/corpus.hpp"

namespace kgte {

struct ParseOutcome {
    std::vector<Triplet> triplets;  // first-occurrence order, deduplicated
    std::size_t malformed_lines = 0;
    bool truncated_to_max = false;
};

/// Total: never throws on any input.
///
/// Each non-blank line, after trimming and stripping one enumeration marker
/// ("1." / "1)" / "-" / "*"), must be a bare "(f1, f2, f3)" tuple with
/// exactly two commas at parenthesis depth zero. Fields go through
/// normalize_surface; a tuple with an empty field counts as malformed.
/// Accepted triplets beyond `max_triplets` are dropped and flagged.
ParseOutcome parse_triplets(std::string_view raw, std::size_t max_triplets);

}  // namespace kgte
