#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"
#include "kgte/retriever.hpp"
#include "kgte/vector_index.hpp"

namespace kgte {

struct Counts {
    std::size_t tp = 0;
    std::size_t n_pred = 0;
    std::size_t n_gold = 0;

    double precision() const;
    double recall() const;
    double f1() const;

    Counts& operator+=(const Counts& o) {
        tp += o.tp;
        n_pred += o.n_pred;
        n_gold += o.n_gold;
        return *this;
    }
    friend bool operator==(const Counts&, const Counts&) = default;
};

struct SentenceRecord {
    std::size_t id = 0;
    std::vector<Triplet> predicted;
    std::vector<Triplet> gold;
    std::size_t tp = 0;
    bool failed = false;  // remote failure scored as empty prediction
};

struct EvalReport {
    Counts totals;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::map<std::size_t, Counts> per_count;  // keyed by |gold|
    std::vector<SentenceRecord> per_sentence;
    std::size_t failed_sentences = 0;
};

/// Exact match on normalized directed tuples; both sides are treated as sets.
std::size_t count_matches(const std::vector<Triplet>& predicted, const std::vector<Triplet>& gold);

/// Throws Error{Misaligned} when the two lists differ in length.
EvalReport micro_f1(const std::vector<std::vector<Triplet>>& predictions,
                    const std::vector<std::vector<Triplet>>& gold);

/// Serial fold of per-sentence records into a report.
EvalReport aggregate(std::vector<SentenceRecord> records);

/// Stable JSON serialization; `indent` < 0 gives the compact form used
/// for byte-level comparison.
std::string dump_report(const EvalReport& report, int indent = 2);

/// Fraction of all gold triplets found inside their sentence's context.
/// Throws Error{Misaligned}. Returns 0 when there are no gold triplets.
double context_hit_probability(const std::vector<std::vector<Triplet>>& contexts,
                               const std::vector<std::vector<Triplet>>& gold);

struct CurvePoint {
    std::size_t n_kb = 0;
    double p = 0.0;
};

struct ContextQualityCurve {
    ContextMode mode = ContextMode::Triplets;
    double kb_scale = 1.0;
    std::vector<CurvePoint> points;

    std::string to_csv() const;  // header "n_kb,p"
};

/// One P per N_KB through the retriever (diversity filter included in
/// triplet mode). Sentences are processed in parallel; the query embedding
/// is computed once per sentence. n_kb values must be strictly increasing.
ContextQualityCurve sweep_context_quality(const std::vector<AnnotatedSentence>& split,
                                          const VectorIndex& index, const Encoder& encoder,
                                          const std::vector<std::size_t>& n_kb_values,
                                          double kb_scale = 1.0);

/// Retrieve contexts for every sentence (parallel over sentences).
std::vector<RetrievedContext> retrieve_all(const std::vector<AnnotatedSentence>& split,
                                           const VectorIndex& index, const Encoder& encoder,
                                           std::size_t n_kb);

}  // namespace kgte
