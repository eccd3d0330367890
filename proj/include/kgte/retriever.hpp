#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"
#include "kgte/vector_index.hpp"

namespace kgte {

inline constexpr std::size_t kDefaultNkb = 5;

enum class ContextMode { Triplets, Examples };

struct ScoredTriplet {
    Triplet triplet;
    double score = 0.0;
    std::size_t node_id = 0;
};

struct ScoredExample {
    AnnotatedSentence example;
    double score = 0.0;
    std::size_t node_id = 0;
};

struct RetrievedContext {
    ContextMode mode = ContextMode::Triplets;
    std::vector<ScoredTriplet> triplets;  // mode == Triplets
    std::vector<ScoredExample> examples;  // mode == Examples
    std::size_t n_kb_requested = 0;

    std::size_t size() const {
        return mode == ContextMode::Triplets ? triplets.size() : examples.size();
    }
    bool empty() const { return size() == 0; }

    /// Triplets offered by this context: the triplets themselves, or the
    /// union of the examples' gold sets (first occurrence order).
    std::vector<Triplet> triplet_set() const;

    static RetrievedContext empty_of(ContextMode mode, std::size_t n_kb) {
        RetrievedContext c;
        c.mode = mode;
        c.n_kb_requested = n_kb;
        return c;
    }
};

/// Keep the first two occurrences of each predicate in rank order.
std::vector<ScoredTriplet> diversity_filter(const std::vector<ScoredTriplet>& ranked);

/// top-n_kb over a triplet index, then the diversity filter. n_kb counts
/// candidates before filtering; there is no top-up.
RetrievedContext retrieve_triplets(std::string_view sentence, const VectorIndex& index,
                                   const Encoder& encoder, std::size_t n_kb = kDefaultNkb);

RetrievedContext retrieve_examples(std::string_view sentence, const VectorIndex& index,
                                   const Encoder& encoder, std::size_t n_kb = kDefaultNkb);

/// Same as the two above, on a precomputed query vector.
RetrievedContext retrieve_triplets(const EmbeddingVector& query, const VectorIndex& index,
                                   std::size_t n_kb);
RetrievedContext retrieve_examples(const EmbeddingVector& query, const VectorIndex& index,
                                   std::size_t n_kb);

}  // namespace kgte
