#include "kgte/analysis.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "kgte/error.hpp"
#include "kgte/extraction.hpp"

namespace kgte {
namespace {

using testing::T;

TEST(LinearFit, CollinearPoints) {
    const auto fit = linear_fit({{0, 1}, {1, 3}, {2, 5}});
    EXPECT_NEAR(fit.slope, 2.0, 1e-12);
    EXPECT_NEAR(fit.intercept, 1.0, 1e-12);
    EXPECT_EQ(fit.r2, 1.0);
    EXPECT_EQ(fit.n_points, 3u);
}

TEST(LinearFit, ConstantYAndDegenerateX) {
    const auto flat = linear_fit({{0, 4}, {1, 4}, {5, 4}});
    EXPECT_EQ(flat.slope, 0.0);
    EXPECT_EQ(flat.intercept, 4.0);
    EXPECT_EQ(flat.r2, 0.0);
    EXPECT_THROW(linear_fit({{1, 2}, {1, 3}}), Error);
    EXPECT_THROW(linear_fit({{1, 2}}), Error);
}

TEST(LinearFit, AgreesWithNormalEquations) {
    std::mt19937_64 rng(3);
    std::normal_distribution<double> noise(0.0, 0.3);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<Point> pts;
        const std::size_t n = 3 + rng() % 20;
        for (std::size_t i = 0; i < n; ++i) {
            const double x = double(rng() % 1000) / 37.0;
            pts.push_back({x, 0.7 * x - 2.0 + noise(rng)});
        }
        // raw-sum normal equations as the oracle
        double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
        for (const auto& p : pts) {
            sx += p.x;
            sy += p.y;
            sxx += p.x * p.x;
            sxy += p.x * p.y;
            syy += p.y * p.y;
        }
        const double dn = double(n);
        const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
        const double intercept = (sy - slope * sx) / dn;
        const double r = (dn * sxy - sx * sy) / std::sqrt((dn * sxx - sx * sx) * (dn * syy - sy * sy));
        const auto fit = linear_fit(pts);
        EXPECT_NEAR(fit.slope, slope, 1e-9);
        EXPECT_NEAR(fit.intercept, intercept, 1e-8);
        EXPECT_NEAR(fit.r2, r * r, 1e-9);
        EXPECT_GE(fit.r2, 0.0);
        EXPECT_LE(fit.r2, 1.0);
    }
}

TEST(LinearFit, OrderInvariantAndAffineEquivariant) {
    std::mt19937_64 rng(4);
    std::vector<Point> pts;
    for (int i = 0; i < 15; ++i) pts.push_back({double(i) * 0.3, std::sin(double(i))});
    const auto base = linear_fit(pts);
    auto shuffled = pts;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    const auto again = linear_fit(shuffled);
    EXPECT_NEAR(again.slope, base.slope, 1e-12);
    EXPECT_NEAR(again.intercept, base.intercept, 1e-12);
    EXPECT_NEAR(again.r2, base.r2, 1e-12);
    std::vector<Point> scaled;
    for (const auto& p : pts) scaled.push_back({p.x, 3.0 * p.y + 1.5});
    const auto affine = linear_fit(scaled);
    EXPECT_NEAR(affine.slope, 3.0 * base.slope, 1e-12);
    EXPECT_NEAR(affine.intercept, 3.0 * base.intercept + 1.5, 1e-12);
    EXPECT_NEAR(affine.r2, base.r2, 1e-12);
}

TEST(LogFit, RecoversSlopeOnLogLinearData) {
    std::vector<Point> pts;
    for (const auto& m : model_catalog()) {
        pts.push_back({m.parameters_billions * 1e9, 0.05 * std::log(m.parameters_billions * 1e9) - 0.9});
    }
    const auto fit = log_param_fit(pts);
    EXPECT_NEAR(fit.slope, 0.05, 1e-12);
    EXPECT_NEAR(fit.intercept, -0.9, 1e-10);
    EXPECT_NEAR(fit.r2, 1.0, 1e-12);
    EXPECT_THROW(log_param_fit({{0.0, 1.0}, {1.0, 2.0}}), Error);
}

TEST(Csv, ReadWithAndWithoutHeader) {
    const auto dir = testing::scratch_dir("csv");
    std::ofstream(dir / "a.csv") << "x,y\n0,1\n1,3\r\n\n2,5\n";
    std::ofstream(dir / "b.csv") << "0.5,1e-3\n";
    std::ofstream(dir / "bad.csv") << "x,y\n1,2\n3;4\n";
    const auto a = read_points_csv((dir / "a.csv").string());
    ASSERT_EQ(a.size(), 3u);
    EXPECT_EQ(a[2].x, 2.0);
    EXPECT_EQ(a[2].y, 5.0);
    const auto b = read_points_csv((dir / "b.csv").string());
    ASSERT_EQ(b.size(), 1u);
    EXPECT_EQ(b[0].y, 1e-3);
    try {
        read_points_csv((dir / "bad.csv").string());
        FAIL();
    } catch (const RecordError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(read_points_csv((dir / "missing.csv").string()), Error);
    std::ofstream(dir / "round.csv") << points_to_csv(a);
    const auto back = read_points_csv((dir / "round.csv").string());
    ASSERT_EQ(back.size(), a.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(back[i].y, a[i].y);
    std::filesystem::remove_all(dir);
}

std::vector<Triplet> numbered(std::size_t n) {
    std::vector<Triplet> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(T("t" + std::to_string(i), "r", "o"));
    return out;
}

TEST(RandomStudy, RowAgainstAnalyticAndMonteCarlo) {
    // three sentences with contexts of size 5, 3, 0
    const std::vector<std::vector<Triplet>> contexts = {numbered(5), numbered(3), {}};
    const std::vector<std::vector<Triplet>> gold = {{numbered(5)[1]}, {numbered(3)[0], T("x", "y", "z")}, {T("a", "b", "c")}};
    const auto row = random_model_row(contexts, gold, 5, 2, 7, 20000);
    EXPECT_EQ(row.p, 2.0 / 4.0);
    // E[F1 | m] = 2 m k / (c (m + |gold|)), averaged over n = 1..max
    const double s0 = (2.0 * 1 * 1 / (5.0 * 2) + 2.0 * 2 * 1 / (5.0 * 3)) / 2;
    const double s1 = (2.0 * 1 * 1 / (3.0 * 3) + 2.0 * 2 * 1 / (3.0 * 4)) / 2;
    const double expected = (s0 + s1 + 0.0) / 3.0;
    ASSERT_TRUE(row.exhaustive_f1);
    EXPECT_NEAR(*row.exhaustive_f1, expected, 1e-12);
    EXPECT_NEAR(row.monte_carlo_f1, expected, 0.005);
    const double closed = (std::pow(0.5 / 5, 1) + std::pow(0.5 / 5, 2) + std::pow(0.5 / 5, 1)) / 3.0;
    EXPECT_NEAR(row.closed_form_f1, closed, 1e-15);
    EXPECT_GT(row.monte_carlo_micro_f1, 0.0);
}

TEST(RandomStudy, DeterministicAcrossThreadCounts) {
    const std::vector<std::vector<Triplet>> contexts = {numbered(6), numbered(4)};
    const std::vector<std::vector<Triplet>> gold = {{numbered(6)[0]}, {numbered(4)[3]}};
    const auto a = random_model_row(contexts, gold, 6, 3, 11, 500);
    const auto b = random_model_row(contexts, gold, 6, 3, 11, 500);
    EXPECT_EQ(a.monte_carlo_f1, b.monte_carlo_f1);
    EXPECT_EQ(a.monte_carlo_micro_f1, b.monte_carlo_micro_f1);
    const auto c = random_model_row(contexts, gold, 6, 3, 12, 500);
    EXPECT_NE(a.monte_carlo_f1, c.monte_carlo_f1);
}

TEST(RandomStudy, ParallelMatchesSerialReference) {
    std::mt19937_64 rng(21);
    std::vector<std::vector<Triplet>> contexts, gold;
    for (int s = 0; s < 30; ++s) {
        const auto pool = numbered(1 + rng() % 15);
        contexts.push_back(pool);
        gold.push_back({pool[rng() % pool.size()], T("x" + std::to_string(s), "y", "z")});
    }
    const auto parallel = random_model_row(contexts, gold, 15, 4, 9, 3000);
    const auto serial = random_model_row_serial(contexts, gold, 15, 4, 9, 3000);
    EXPECT_EQ(parallel.monte_carlo_f1, serial.monte_carlo_f1);
    EXPECT_EQ(parallel.monte_carlo_micro_f1, serial.monte_carlo_micro_f1);
    EXPECT_EQ(parallel.closed_form_f1, serial.closed_form_f1);
    EXPECT_EQ(parallel.exhaustive_f1.has_value(), serial.exhaustive_f1.has_value());
}

TEST(RandomStudy, LargeContextsSkipExhaustive) {
    const auto row = random_model_row({numbered(13)}, {{numbered(13)[0]}}, 13, 2, 1, 10);
    EXPECT_FALSE(row.exhaustive_f1);
    EXPECT_THROW(random_model_row({}, {}, 5, 1, 1, 10), Error);
    EXPECT_THROW(random_model_row({{}}, {{}, {}}, 5, 1, 1, 10), Error);
}

TEST(RandomStudy, EndToEndOverIndex) {
    const auto data = testing::planted_dataset(120, 30, 5);
    EncoderConfig ec;
    ec.dimension = 256;
    const HashedNgramEncoder enc(ec);
    const auto index = build_index(build_kb(data.train, data.validation), NodeKind::Triplet,
                                   ExampleEmbedMode::SentenceOnly, enc);
    RandomStudyConfig config;
    config.n_kb_values = {1, 2, 4, 8};
    config.max_triplets = 2;
    config.seed = 3;
    config.trials = 300;
    const auto rows = random_model_study(data.test, index, enc, config);
    ASSERT_EQ(rows.size(), 4u);
    EXPECT_EQ(rows[0].p, 1.0);
    ASSERT_TRUE(rows[0].exhaustive_f1);
    EXPECT_NEAR(*rows[0].exhaustive_f1, 1.0, 1e-12);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        EXPECT_LT(*rows[i].exhaustive_f1, *rows[i - 1].exhaustive_f1);
        EXPECT_LT(rows[i].closed_form_f1, rows[i - 1].closed_form_f1);
    }
    const auto csv = random_study_to_csv(rows);
    EXPECT_EQ(csv.substr(0, csv.find('\n')).find("n_kb"), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}

}  // namespace
}  // namespace kgte
