#include "kgte/retriever.hpp"

#include <unordered_map>

#include "kgte/error.hpp"

namespace kgte {

std::vector<Triplet> RetrievedContext::triplet_set() const {
    std::vector<Triplet> all;
    if (mode == ContextMode::Triplets) {
        all.reserve(triplets.size());
        for (const auto& t : triplets) all.push_back(t.triplet);
        return all;
    }
    for (const auto& e : examples) all.insert(all.end(), e.example.gold.begin(), e.example.gold.end());
    return dedup_triplets(all);
}

std::vector<ScoredTriplet> diversity_filter(const std::vector<ScoredTriplet>& ranked) {
    std::unordered_map<std::string, int> seen;
    std::vector<ScoredTriplet> kept;
    kept.reserve(ranked.size());
    for (const auto& item : ranked) {
        if (++seen[item.triplet.predicate] <= 2) kept.push_back(item);
    }
    return kept;
}

namespace {

void require_kind(const VectorIndex& index, NodeKind kind) {
    if (index.kind() != kind) {
        throw Error(ErrorCode::InvalidArgument,
                    "expected a " + to_string(kind) + " index, got " + to_string(index.kind()));
    }
}

}  // namespace

RetrievedContext retrieve_triplets(const EmbeddingVector& query, const VectorIndex& index, std::size_t n_kb) {
    require_kind(index, NodeKind::Triplet);
    std::vector<ScoredTriplet> ranked;
    for (const auto& hit : index.top_k(query, n_kb)) {
        ranked.push_back({std::get<Triplet>(index.node(hit.id).payload), hit.score, hit.id});
    }
    auto context = RetrievedContext::empty_of(ContextMode::Triplets, n_kb);
    context.triplets = diversity_filter(ranked);
    return context;
}

RetrievedContext retrieve_examples(const EmbeddingVector& query, const VectorIndex& index, std::size_t n_kb) {
    require_kind(index, NodeKind::Example);
    auto context = RetrievedContext::empty_of(ContextMode::Examples, n_kb);
    for (const auto& hit : index.top_k(query, n_kb)) {
        context.examples.push_back({std::get<AnnotatedSentence>(index.node(hit.id).payload), hit.score, hit.id});
    }
    return context;
}

RetrievedContext retrieve_triplets(std::string_view sentence, const VectorIndex& index,
                                   const Encoder& encoder, std::size_t n_kb) {
    return retrieve_triplets(encoder.encode(sentence), index, n_kb);
}

RetrievedContext retrieve_examples(std::string_view sentence, const VectorIndex& index,
                                   const Encoder& encoder, std::size_t n_kb) {
    return retrieve_examples(encoder.encode(sentence), index, n_kb);
}

}  // namespace kgte
