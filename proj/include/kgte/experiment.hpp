#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgte/analysis.hpp"
#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"
#include "kgte/evaluation.hpp"
#include "kgte/extraction.hpp"
#include "kgte/prompting.hpp"
#include "kgte/vector_index.hpp"

namespace kgte {

/// zero | static2 | triplets (0.5-shot context triplets) | examples (few-shot)
enum class ExperimentMode { Zero, StaticTwoShot, Triplets, Examples };

std::string to_string(ExperimentMode mode);
ExperimentMode parse_experiment_mode(std::string_view s);
ShotMode shot_mode_for(ExperimentMode mode);

/// Everything needed to replay a run.
struct ExperimentRunSpec {
    std::string manifest;  // dataset manifest path
    ExperimentMode mode = ExperimentMode::Zero;
    std::size_t n_kb = kDefaultNkb;
    double kb_scale = 1.0;
    std::uint64_t seed = 0;
    ExtractorKind extractor = ExtractorKind::OracleGold;
    PromptKind prompt = PromptKind::Base;
    ExampleEmbedMode embed_mode = ExampleEmbedMode::SentenceOnly;
    EncoderConfig encoder;
    GenerationConfig generation;
    std::optional<std::size_t> char_budget;  // default from the model's context window
    std::optional<std::size_t> limit;        // score only the first `limit` test sentences

    std::string to_json() const;
    static ExperimentRunSpec from_json(const std::string& text);
};

struct ExperimentResult {
    EvalReport report;
    std::vector<PromptInstance> prompts;
    std::vector<std::string> raw_outputs;
    std::vector<std::size_t> malformed_lines;
    std::vector<std::string> errors;  // per sentence; empty string when fine
};

/// Pre-loaded inputs so callers (tests, the ablation driver) can avoid
/// re-reading the dataset or rebuilding indexes.
struct ExperimentInputs {
    const Dataset* dataset = nullptr;
    const KnowledgeBase* kb = nullptr;      // already downscaled; built from the dataset otherwise
    const VectorIndex* index = nullptr;     // must match mode; built otherwise
    const Encoder* encoder = nullptr;
    std::shared_ptr<HttpTransport> transport;  // remote extractor only
};

/// retrieve -> render -> extract -> parse -> score, parallel over sentences.
/// Remote failures are recorded per sentence and scored as empty
/// predictions.
ExperimentResult run_experiment(const ExperimentRunSpec& spec, const ExperimentInputs& inputs = {});

/// Writes report.json, sentences.jsonl and spec.json into `out_dir`.
void write_experiment_artifacts(const ExperimentRunSpec& spec, const ExperimentResult& result,
                                const std::filesystem::path& out_dir);

struct AblationPoint {
    double scale = 0.0;
    double p = 0.0;   // P_S(N_KB)
    double f1 = 0.0;
};

struct AblationResult {
    std::vector<AblationPoint> points;
    FitResult fit;  // F1 against P_S
};

/// Fit F1 = slope * P_S + intercept over the given points.
FitResult fit_ablation(const std::vector<AblationPoint>& points);

/// For each scale: downscale the KB with `spec.seed`, measure P_S(spec.n_kb)
/// on the test split, run the experiment, then fit. S = 0 runs with an
/// empty context and P = 0.
AblationResult run_ablation(const ExperimentRunSpec& spec, const std::vector<double>& scales,
                            const ExperimentInputs& inputs = {});

}  // namespace kgte
