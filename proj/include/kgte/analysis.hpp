#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"
#include "kgte/vector_index.hpp"

namespace kgte {

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct FitResult {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;  // clamped to [0, 1]
    std::size_t n_points = 0;
};

/// Ordinary least squares on mean-centred data, r2 = 1 - SS_res/SS_tot.
/// Constant y gives r2 = 0. Throws Error{InvalidArgument} with fewer than
/// two points or when all x are equal.
FitResult linear_fit(const std::vector<Point>& points);

/// linear_fit over (ln x, y). Throws Error{InvalidArgument} for x <= 0.
FitResult log_param_fit(const std::vector<Point>& points);

/// Reads "x,y" CSV (header optional).
std::vector<Point> read_points_csv(const std::string& path);
std::string points_to_csv(const std::vector<Point>& points);

struct RandomStudyRow {
    std::size_t n_kb = 0;
    double p = 0.0;                    // measured P(N_KB)
    double monte_carlo_f1 = 0.0;       // mean per-sentence F1 over trials and sentences
    double monte_carlo_micro_f1 = 0.0; // mean per-trial corpus micro F1
    double closed_form_f1 = 0.0;       // mean over sentences of (P/N_KB)^{|gold|}
    std::optional<double> exhaustive_f1;  // when every context has <= 12 triplets
};

struct RandomStudyConfig {
    std::vector<std::size_t> n_kb_values;
    std::size_t max_triplets = 1;
    std::uint64_t seed = 0;
    std::size_t trials = 1000;
};

/// Random-model degradation with N_KB. Trials run in parallel; each trial
/// draws from its own generator derived from (seed, trial) and the
/// per-trial values are summed serially, so results do not depend on
/// scheduling.
std::vector<RandomStudyRow> random_model_study(const std::vector<AnnotatedSentence>& split,
                                               const VectorIndex& index, const Encoder& encoder,
                                               const RandomStudyConfig& config);

/// Same computation on precomputed per-sentence contexts.
RandomStudyRow random_model_row(const std::vector<std::vector<Triplet>>& contexts,
                                const std::vector<std::vector<Triplet>>& gold, std::size_t n_kb,
                                std::size_t max_triplets, std::uint64_t seed, std::size_t trials);

/// Single-threaded reference for random_model_row; results are identical.
RandomStudyRow random_model_row_serial(const std::vector<std::vector<Triplet>>& contexts,
                                       const std::vector<std::vector<Triplet>>& gold, std::size_t n_kb,
                                       std::size_t max_triplets, std::uint64_t seed, std::size_t trials);

std::string random_study_to_csv(const std::vector<RandomStudyRow>& rows);

}  // namespace kgte
