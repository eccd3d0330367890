#include "kgte/evaluation.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "json.hpp"
#include "kgte/error.hpp"

namespace kgte {
namespace {

using testing::sentence;
using testing::T;

using Lists = std::vector<std::vector<Triplet>>;

// Independent counter: string keys, nested loops, no shared helpers.
struct NaiveTotals {
    long tp = 0, pred = 0, gold = 0;
};
NaiveTotals naive_count(const Lists& predictions, const Lists& gold) {
    NaiveTotals n;
    for (std::size_t i = 0; i < gold.size(); ++i) {
        std::set<std::string> p, g;
        for (const auto& t : predictions[i]) p.insert(t.subject + "\x1f" + t.predicate + "\x1f" + t.object);
        for (const auto& t : gold[i]) g.insert(t.subject + "\x1f" + t.predicate + "\x1f" + t.object);
        for (const auto& x : p) n.tp += g.count(x);
        n.pred += long(p.size());
        n.gold += long(g.size());
    }
    return n;
}

std::pair<Lists, Lists> random_fixture(std::mt19937_64& rng, std::size_t n_sentences) {
    Lists pred, gold;
    std::vector<Triplet> vocab;
    for (int i = 0; i < 30; ++i) vocab.push_back(testing::random_triplet(rng, 5));
    for (std::size_t s = 0; s < n_sentences; ++s) {
        std::vector<Triplet> g, p;
        const std::size_t ng = 1 + rng() % 5;
        for (std::size_t i = 0; i < ng; ++i) g.push_back(vocab[rng() % vocab.size()]);
        const std::size_t np = rng() % 6;
        for (std::size_t i = 0; i < np; ++i) p.push_back(vocab[rng() % vocab.size()]);
        gold.push_back(dedup_triplets(g));
        pred.push_back(dedup_triplets(p));
    }
    return {pred, gold};
}

TEST(MicroF1, HandComputedCase) {
    const auto report = micro_f1({{T("a", "r1", "b"), T("c", "r2", "d")}},
                                 {{T("a", "r1", "b"), T("e", "r3", "f"), T("g", "r4", "h")}});
    EXPECT_EQ(report.totals, (Counts{1, 2, 3}));
    EXPECT_EQ(report.precision, 0.5);
    EXPECT_EQ(report.recall, 1.0 / 3.0);
    EXPECT_EQ(report.f1, 0.4);
}

TEST(MicroF1, PerfectAndEmpty) {
    std::mt19937_64 rng(1);
    const auto [pred, gold] = random_fixture(rng, 20);
    EXPECT_EQ(micro_f1(gold, gold).f1, 1.0);
    const auto empty = micro_f1(Lists(gold.size()), gold);
    EXPECT_EQ(empty.f1, 0.0);
    EXPECT_EQ(empty.precision, 0.0);
    EXPECT_EQ(micro_f1({}, {}).f1, 0.0);
}

TEST(MicroF1, Misaligned) {
    try {
        micro_f1({{}}, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::Misaligned);
    }
}

TEST(MicroF1, MatchesIndependentCounter) {
    std::mt19937_64 rng(2);
    for (std::size_t n : {1u, 50u, 2000u}) {
        const auto [pred, gold] = random_fixture(rng, n);
        const auto report = micro_f1(pred, gold);
        const auto naive = naive_count(pred, gold);
        EXPECT_EQ(long(report.totals.tp), naive.tp);
        EXPECT_EQ(long(report.totals.n_pred), naive.pred);
        EXPECT_EQ(long(report.totals.n_gold), naive.gold);
        EXPECT_LE(report.totals.tp, std::min(report.totals.n_pred, report.totals.n_gold));
        const double p = naive.pred ? double(naive.tp) / double(naive.pred) : 0.0;
        const double r = double(naive.tp) / double(naive.gold);
        EXPECT_NEAR(report.f1, p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-15);
    }
}

TEST(MicroF1, PermutationInvariant) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        auto [pred, gold] = random_fixture(rng, 30);
        const auto before = micro_f1(pred, gold);
        std::vector<std::size_t> order(pred.size());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        Lists p2, g2;
        for (auto i : order) {
            p2.push_back(pred[i]);
            g2.push_back(gold[i]);
            std::shuffle(p2.back().begin(), p2.back().end(), rng);
            std::shuffle(g2.back().begin(), g2.back().end(), rng);
        }
        const auto after = micro_f1(p2, g2);
        EXPECT_EQ(after.totals, before.totals);
        EXPECT_EQ(after.f1, before.f1);
        EXPECT_EQ(after.per_count, before.per_count);
    }
}

TEST(MicroF1, AddingCorrectOrIncorrectPrediction) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 300; ++trial) {
        auto [pred, gold] = random_fixture(rng, 10);
        const double base = micro_f1(pred, gold).f1;
        const std::size_t s = rng() % gold.size();
        for (const auto& g : gold[s]) {
            if (std::find(pred[s].begin(), pred[s].end(), g) == pred[s].end()) {
                auto better = pred;
                better[s].push_back(g);
                EXPECT_GE(micro_f1(better, gold).f1, base);
                break;
            }
        }
        auto worse = pred;
        worse[s].push_back(T("never", "in", "gold" + std::to_string(trial)));
        EXPECT_LE(micro_f1(worse, gold).f1, base);
    }
}

TEST(MicroF1, PerCountRecombinesExactly) {
    std::mt19937_64 rng(5);
    const auto [pred, gold] = random_fixture(rng, 200);
    const auto report = micro_f1(pred, gold);
    Counts sum;
    for (const auto& [count, c] : report.per_count) {
        sum += c;
        EXPECT_GE(count, 1u);
    }
    EXPECT_EQ(sum, report.totals);
    EXPECT_EQ(sum.f1(), report.f1);
    for (const auto& rec : report.per_sentence) EXPECT_GT(report.per_count.count(rec.gold.size()), 0u);
}

TEST(MicroF1, SetSemantics) {
    EXPECT_EQ(count_matches({T("a", "r", "b"), T("a", "r", "b")}, {T("a", "r", "b")}), 1u);
    EXPECT_EQ(count_matches({T("b", "r", "a")}, {T("a", "r", "b")}), 0u);
}

TEST(Report, JsonIsStable) {
    const auto report = micro_f1({{T("a", "r1", "b")}}, {{T("a", "r1", "b"), T("c", "r", "d")}});
    const auto compact = dump_report(report, -1);
    EXPECT_EQ(compact, dump_report(report, -1));
    EXPECT_EQ(compact.find('\n'), std::string::npos);
    const auto doc = nlohmann::json::parse(dump_report(report));
    EXPECT_EQ(doc["tp"], 1);
    EXPECT_EQ(doc["n_gold"], 2);
    EXPECT_NEAR(doc["f1"].get<double>(), 2.0 / 3.0, 1e-15);
}

TEST(HitProbability, Examples) {
    const std::vector<Triplet> gold = {T("a", "r", "b"), T("c", "r", "d"), T("e", "r", "f")};
    EXPECT_EQ(context_hit_probability({gold}, {gold}), 1.0);
    EXPECT_EQ(context_hit_probability({{gold[0], gold[2], T("x", "y", "z")}}, {gold}), 2.0 / 3.0);
    EXPECT_EQ(context_hit_probability({{T("x", "y", "z")}}, {gold}), 0.0);
    EXPECT_THROW(context_hit_probability({}, {gold}), Error);
}

TEST(HitProbability, MonotoneInContextInclusion) {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        auto [ctx, gold] = random_fixture(rng, 8);
        const double before = context_hit_probability(ctx, gold);
        ctx[rng() % ctx.size()].push_back(gold[rng() % gold.size()].front());
        EXPECT_GE(context_hit_probability(ctx, gold), before);
    }
}

EncoderConfig encoder_config() {
    EncoderConfig c;
    c.dimension = 384;
    return c;
}

TEST(Sweep, PlantedNearestNeighbourGivesFullHitAtOne) {
    const auto data = testing::planted_dataset(200, 60, 11);
    const HashedNgramEncoder enc(encoder_config());
    const auto kb = build_kb(data.train, data.validation);
    const auto index = build_index(kb, NodeKind::Triplet, ExampleEmbedMode::SentenceOnly, enc);
    // brute-force check that the fixture is what it claims
    for (const auto& s : data.test) {
        const auto q = enc.encode(s.text);
        std::size_t best = 0;
        double best_score = -2;
        for (const auto& node : index.nodes()) {
            const double sc = cosine(q, node.vector);
            if (sc > best_score) {
                best_score = sc;
                best = node.id;
            }
        }
        ASSERT_EQ(std::get<Triplet>(index.node(best).payload), s.gold.front()) << s.text;
    }
    const auto curve = sweep_context_quality(data.test, index, enc, {1, 2, 5, 10, 20});
    ASSERT_EQ(curve.points.size(), 5u);
    for (const auto& pt : curve.points) EXPECT_EQ(pt.p, 1.0);
    EXPECT_EQ(curve.to_csv().substr(0, 7), "n_kb,p\n");
}

TEST(Sweep, NonDecreasingOnNoisyFixture) {
    std::mt19937_64 rng(12);
    std::vector<AnnotatedSentence> kb_sentences;
    for (int i = 0; i < 150; ++i) {
        std::vector<Triplet> gold;
        for (int j = 0; j < 3; ++j) gold.push_back(testing::random_triplet(rng, 4));
        kb_sentences.push_back(sentence(testing::random_phrase(rng, 6), gold));
    }
    const HashedNgramEncoder enc(encoder_config());
    const auto kb = build_kb(kb_sentences, {});
    std::vector<std::size_t> ks(20);
    std::iota(ks.begin(), ks.end(), 1);
    for (auto kind : {NodeKind::Triplet, NodeKind::Example}) {
        const auto index = build_index(kb, kind, ExampleEmbedMode::SentenceOnly, enc);
        const std::vector<AnnotatedSentence> split(kb_sentences.begin(), kb_sentences.begin() + 40);
        const auto curve = sweep_context_quality(split, index, enc, ks);
        for (std::size_t i = 1; i < curve.points.size(); ++i) EXPECT_GE(curve.points[i].p, curve.points[i - 1].p);
        EXPECT_GT(curve.points.back().p, 0.0);
    }
}

TEST(Sweep, NestedScaleOnPlantedFixture) {
    const auto data = testing::planted_dataset(300, 100, 13);
    const HashedNgramEncoder enc(encoder_config());
    const auto full = build_kb(data.train, data.validation);
    const std::vector<std::size_t> ks = {1, 3, 5};
    std::vector<double> previous = {1.0, 1.0, 1.0};
    for (double scale : {1.0, 0.75, 0.5, 0.25}) {
        const auto kb = downscale_kb(full, scale, 99);
        const auto index = build_index(kb, NodeKind::Triplet, ExampleEmbedMode::SentenceOnly, enc);
        const auto curve = sweep_context_quality(data.test, index, enc, ks, scale);
        for (std::size_t i = 0; i < ks.size(); ++i) {
            EXPECT_LE(curve.points[i].p, previous[i] + 1e-15) << "scale " << scale;
            previous[i] = curve.points[i].p;
        }
        // every hit at this scale is a gold triplet still present in the smaller KB
        const std::set<Triplet> present(kb.triplets.begin(), kb.triplets.end());
        std::size_t in_kb = 0;
        for (const auto& s : data.test) in_kb += present.count(s.gold.front());
        EXPECT_EQ(curve.points[0].p, double(in_kb) / double(data.test.size()));
    }
}

TEST(Sweep, Preconditions) {
    const auto data = testing::planted_dataset(20, 5, 1);
    const HashedNgramEncoder enc(encoder_config());
    const auto index = build_index(build_kb(data.train, data.validation), NodeKind::Triplet,
                                   ExampleEmbedMode::SentenceOnly, enc);
    EXPECT_THROW(sweep_context_quality(data.test, index, enc, {3, 3}), Error);
    EXPECT_THROW(sweep_context_quality(data.test, index, enc, {}), Error);
    EncoderConfig other = encoder_config();
    other.dimension = 128;
    EXPECT_THROW(sweep_context_quality(data.test, index, HashedNgramEncoder(other), {1}), Error);
}

TEST(RetrieveAll, MatchesPerSentenceRetrieval) {
    const auto data = testing::planted_dataset(100, 40, 2);
    const HashedNgramEncoder enc(encoder_config());
    const auto index = build_index(build_kb(data.train, data.validation), NodeKind::Triplet,
                                   ExampleEmbedMode::SentenceOnly, enc);
    const auto all = retrieve_all(data.test, index, enc, 4);
    ASSERT_EQ(all.size(), data.test.size());
    for (std::size_t i = 0; i < all.size(); ++i) {
        EXPECT_EQ(all[i].triplet_set(), retrieve_triplets(data.test[i].text, index, enc, 4).triplet_set());
    }
}

}  // namespace
}  // namespace kgte
