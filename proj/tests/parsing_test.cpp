#include "kgte/parsing.hpp"

#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "kgte/encoder.hpp"

namespace kgte {
namespace {

using testing::T;

TEST(Parse, OneTuplePerLineNormalized) {
    const auto out = parse_triplets("(Alan_Bean, nationality, United_States)\n(Alan_Bean, occupation, astronaut)", 10);
    ASSERT_EQ(out.triplets.size(), 2u);
    EXPECT_EQ(out.triplets[0], T("alan bean", "nationality", "united states"));
    EXPECT_EQ(out.triplets[0].subject, "alan bean");
    EXPECT_EQ(out.triplets[1], T("alan bean", "occupation", "astronaut"));
    EXPECT_EQ(out.malformed_lines, 0u);
    EXPECT_FALSE(out.truncated_to_max);
}

TEST(Parse, ProseAroundTupleRejected) {
    const auto out = parse_triplets("I think the answer is: (a, b, c)", 10);
    EXPECT_TRUE(out.triplets.empty());
    EXPECT_EQ(out.malformed_lines, 1u);
}

TEST(Parse, Duplicates) {
    const auto out = parse_triplets("(a, b, c)\n(a, b, c)\n(A,  b , C)", 10);
    EXPECT_EQ(out.triplets, (std::vector<Triplet>{T("a", "b", "c")}));
    EXPECT_EQ(out.malformed_lines, 0u);
}

TEST(Parse, EnumerationMarkers) {
    const auto out = parse_triplets("1. (a, r, b)\n2) (c, r, d)\n- (e, r, f)\n* (g, r, h)\n  10.   (i, r, j)  \n", 10);
    EXPECT_EQ(out.triplets,
              (std::vector<Triplet>{T("a", "r", "b"), T("c", "r", "d"), T("e", "r", "f"), T("g", "r", "h"), T("i", "r", "j")}));
    EXPECT_EQ(out.malformed_lines, 0u);
}

TEST(Parse, CommaRules) {
    EXPECT_EQ(parse_triplets("(a, b)", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("(a, b, c, d)", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("(a, , c)", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("(_, b, c)", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("(a, b, c", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("a, b, c", 5).malformed_lines, 1u);
    EXPECT_EQ(parse_triplets("(a, b), c)", 5).malformed_lines, 1u);
    const auto nested = parse_triplets("(apollo 12 (mission), operator, nasa)", 5);
    ASSERT_EQ(nested.triplets.size(), 1u);
    EXPECT_EQ(nested.triplets[0].subject, "apollo 12 (mission)");
    EXPECT_EQ(parse_triplets("(f(x, y), r, z)", 5).triplets.size(), 1u);
}

TEST(Parse, BlankLinesAndCrlfIgnored) {
    const auto out = parse_triplets("\n\n(a, r, b)\r\n   \r\n(c, r, d)\r\n", 5);
    EXPECT_EQ(out.triplets.size(), 2u);
    EXPECT_EQ(out.malformed_lines, 0u);
}

TEST(Parse, TruncatesToMaxKeepingFirst) {
    const auto out = parse_triplets("(a, r, 1)\n(a, r, 2)\n(a, r, 1)\n(a, r, 3)\n(a, r, 4)", 2);
    EXPECT_EQ(out.triplets, (std::vector<Triplet>{T("a", "r", "1"), T("a", "r", "2")}));
    EXPECT_TRUE(out.truncated_to_max);
    EXPECT_FALSE(parse_triplets("(a, r, 1)\n(a, r, 1)\n(a, r, 1)", 1).truncated_to_max);
}

TEST(Parse, MixedOutputCountsRejects) {
    const auto out = parse_triplets(
        "Step 1: entities are Aarhus and Denmark.\nTriplets:\n(Aarhus, country, Denmark)\nDone.", 5);
    EXPECT_EQ(out.triplets, (std::vector<Triplet>{T("aarhus", "country", "denmark")}));
    EXPECT_EQ(out.malformed_lines, 3u);
}

TEST(Parse, RoundTripRandomTriplets) {
    std::mt19937_64 rng(99);
    for (int i = 0; i < 10000; ++i) {
        const auto t = testing::random_triplet(rng);
        const auto out = parse_triplets(triplet_to_string(t), 5);
        ASSERT_EQ(out.triplets, (std::vector<Triplet>{t})) << triplet_to_string(t);
        ASSERT_EQ(out.malformed_lines, 0u);
    }
}

TEST(Parse, FirstOccurrenceOrderOverRandomBatches) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Triplet> pool;
        for (int i = 0; i < 6; ++i) pool.push_back(testing::random_triplet(rng, 3));
        std::string raw;
        std::vector<Triplet> expected;
        for (int line = 0; line < 15; ++line) {
            const auto& t = pool[rng() % pool.size()];
            raw += triplet_to_string(t) + "\n";
            if (std::find(expected.begin(), expected.end(), t) == expected.end()) expected.push_back(t);
        }
        EXPECT_EQ(parse_triplets(raw, 100).triplets, expected);
    }
}

TEST(Parse, TotalOnArbitraryBytes) {
    std::mt19937_64 rng(1234);
    const std::string alphabet = "(),-*.0123456789 \n\t\rab_";
    for (int i = 0; i < 20000; ++i) {
        std::string raw(rng() % 200, '\0');
        const bool structured = i % 2 == 0;
        for (auto& c : raw) c = structured ? alphabet[rng() % alphabet.size()] : static_cast<char>(rng() & 0xff);
        ParseOutcome out;
        ASSERT_NO_THROW(out = parse_triplets(raw, 1 + rng() % 5));
        for (const auto& t : out.triplets) {
            EXPECT_FALSE(t.subject.empty());
            EXPECT_FALSE(t.predicate.empty());
            EXPECT_FALSE(t.object.empty());
        }
    }
}

}  // namespace
}  // namespace kgte
