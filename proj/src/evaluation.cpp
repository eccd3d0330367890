#include "kgte/evaluation.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "kgte/error.hpp"

namespace kgte {

using nlohmann::ordered_json;

double Counts::precision() const {
    return n_pred == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_pred);
}

double Counts::recall() const {
    return n_gold == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(n_gold);
}

double Counts::f1() const {
    // 2PR/(P+R) == 2tp/(n_pred+n_gold), computed from integers.
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(n_pred + n_gold);
}

std::size_t count_matches(const std::vector<Triplet>& predicted, const std::vector<Triplet>& gold) {
    const std::unordered_set<Triplet> gold_set(gold.begin(), gold.end());
    std::unordered_set<Triplet> matched;
    for (const auto& t : predicted) {
        if (gold_set.contains(t)) matched.insert(t);
    }
    return matched.size();
}

EvalReport aggregate(std::vector<SentenceRecord> records) {
    EvalReport report;
    for (const auto& r : records) {
        const Counts c{r.tp, r.predicted.size(), r.gold.size()};
        report.totals += c;
        report.per_count[r.gold.size()] += c;
        if (r.failed) ++report.failed_sentences;
    }
    report.precision = report.totals.precision();
    report.recall = report.totals.recall();
    report.f1 = report.totals.f1();
    report.per_sentence = std::move(records);
    return report;
}

EvalReport micro_f1(const std::vector<std::vector<Triplet>>& predictions,
                    const std::vector<std::vector<Triplet>>& gold) {
    if (predictions.size() != gold.size()) {
        throw Error(ErrorCode::Misaligned, "predictions cover " + std::to_string(predictions.size()) +
                                               " sentences, gold covers " + std::to_string(gold.size()));
    }
    std::vector<SentenceRecord> records(gold.size());
    const auto n = static_cast<std::ptrdiff_t>(gold.size());
#pragma omp parallel for schedule(dynamic, 64) if (n > 1024)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        auto& r = records[k];
        r.id = k;
        r.predicted = dedup_triplets(predictions[k]);
        r.gold = dedup_triplets(gold[k]);
        r.tp = count_matches(r.predicted, r.gold);
    }
    return aggregate(std::move(records));
}

namespace {

ordered_json triplets_json(const std::vector<Triplet>& ts) {
    ordered_json out = ordered_json::array();
    for (const auto& t : ts) out.push_back({t.subject, t.predicate, t.object});
    return out;
}

ordered_json counts_json(const Counts& c) {
    return {{"tp", c.tp}, {"n_pred", c.n_pred}, {"n_gold", c.n_gold},
            {"precision", c.precision()}, {"recall", c.recall()}, {"f1", c.f1()}};
}

}  // namespace

std::string dump_report(const EvalReport& report, int indent) {
    ordered_json per_count = ordered_json::object();
    for (const auto& [count, c] : report.per_count) per_count[std::to_string(count)] = counts_json(c);
    ordered_json per_sentence = ordered_json::array();
    for (const auto& r : report.per_sentence) {
        per_sentence.push_back({{"id", r.id},
                                {"tp", r.tp},
                                {"failed", r.failed},
                                {"predicted", triplets_json(r.predicted)},
                                {"gold", triplets_json(r.gold)}});
    }
    ordered_json doc = {{"tp", report.totals.tp},
                        {"n_pred", report.totals.n_pred},
                        {"n_gold", report.totals.n_gold},
                        {"precision", report.precision},
                        {"recall", report.recall},
                        {"f1", report.f1},
                        {"failed_sentences", report.failed_sentences},
                        {"per_count", std::move(per_count)},
                        {"per_sentence", std::move(per_sentence)}};
    return doc.dump(indent);
}

double context_hit_probability(const std::vector<std::vector<Triplet>>& contexts,
                               const std::vector<std::vector<Triplet>>& gold) {
    if (contexts.size() != gold.size()) {
        throw Error(ErrorCode::Misaligned, "contexts cover " + std::to_string(contexts.size()) +
                                               " sentences, gold covers " + std::to_string(gold.size()));
    }
    std::size_t hits = 0;
    std::size_t total = 0;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        const auto g = dedup_triplets(gold[i]);
        hits += count_matches(contexts[i], g);
        total += g.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

std::string ContextQualityCurve::to_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "n_kb,p\n";
    for (const auto& pt : points) out << pt.n_kb << ',' << pt.p << '\n';
    return out.str();
}

namespace {

std::vector<EmbeddingVector> encode_queries(const std::vector<AnnotatedSentence>& split, const Encoder& encoder) {
    std::vector<std::string> texts;
    texts.reserve(split.size());
    for (const auto& s : split) texts.push_back(s.text);
    return encoder.encode_batch(texts);
}

void check_dimension(const std::vector<EmbeddingVector>& queries, const VectorIndex& index) {
    if (!queries.empty() && queries.front().dimension() != index.dimension()) {
        throw Error(ErrorCode::DimensionMismatch, "encoder dimension " + std::to_string(queries.front().dimension()) +
                                                      " does not match index dimension " +
                                                      std::to_string(index.dimension()));
    }
}

RetrievedContext retrieve_one(const EmbeddingVector& q, const VectorIndex& index, std::size_t n_kb) {
    return index.kind() == NodeKind::Triplet ? retrieve_triplets(q, index, n_kb)
                                             : retrieve_examples(q, index, n_kb);
}

}  // namespace

std::vector<RetrievedContext> retrieve_all(const std::vector<AnnotatedSentence>& split, const VectorIndex& index,
                                           const Encoder& encoder, std::size_t n_kb) {
    if (n_kb == 0) throw Error(ErrorCode::InvalidArgument, "N_KB must be >= 1");
    const auto queries = encode_queries(split, encoder);
    check_dimension(queries, index);
    std::vector<RetrievedContext> out(split.size());
    const auto n = static_cast<std::ptrdiff_t>(split.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        out[static_cast<std::size_t>(i)] = retrieve_one(queries[static_cast<std::size_t>(i)], index, n_kb);
    }
    return out;
}

ContextQualityCurve sweep_context_quality(const std::vector<AnnotatedSentence>& split, const VectorIndex& index,
                                          const Encoder& encoder, const std::vector<std::size_t>& n_kb_values,
                                          double kb_scale) {
    if (n_kb_values.empty()) throw Error(ErrorCode::InvalidArgument, "need at least one N_KB value");
    for (std::size_t i = 0; i < n_kb_values.size(); ++i) {
        if (n_kb_values[i] == 0 || (i > 0 && n_kb_values[i] <= n_kb_values[i - 1])) {
            throw Error(ErrorCode::InvalidArgument, "N_KB values must be positive and strictly increasing");
        }
    }
    const auto queries = encode_queries(split, encoder);
    check_dimension(queries, index);
    std::vector<std::vector<Triplet>> gold;
    gold.reserve(split.size());
    for (const auto& s : split) gold.push_back(s.gold);

    ContextQualityCurve curve;
    curve.mode = index.kind() == NodeKind::Triplet ? ContextMode::Triplets : ContextMode::Examples;
    curve.kb_scale = kb_scale;
    const auto n = static_cast<std::ptrdiff_t>(split.size());
    for (const auto n_kb : n_kb_values) {
        std::vector<std::vector<Triplet>> contexts(split.size());
#pragma omp parallel for schedule(dynamic, 16)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            contexts[k] = retrieve_one(queries[k], index, n_kb).triplet_set();
        }
        curve.points.push_back({n_kb, context_hit_probability(contexts, gold)});
    }
    return curve;
}

}  // namespace kgte
