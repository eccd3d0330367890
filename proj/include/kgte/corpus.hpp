#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace kgte {

/// Trim, lowercase (ASCII), map '_' to ' ' and collapse whitespace runs.
/// Idempotent.
std::string normalize_surface(std::string_view raw);

/// A normalized (subject, predicate, object) triple. Construct through
/// `Triplet::make`, which normalizes and rejects empty fields.
struct Triplet {
    std::string subject;
    std::string predicate;
    std::string object;

    static Triplet make(std::string_view subject, std::string_view predicate,
                        std::string_view object);

    friend bool operator==(const Triplet&, const Triplet&) = default;
    friend auto operator<=>(const Triplet&, const Triplet&) = default;
};

struct TripletHash {
    std::size_t operator()(const Triplet& t) const noexcept;
};

struct AnnotatedSentence {
    std::string text;
    std::vector<Triplet> gold;  // duplicates removed, first occurrence kept

    friend bool operator==(const AnnotatedSentence&, const AnnotatedSentence&) = default;
};

/// Remove duplicates, keeping first-occurrence order.
std::vector<Triplet> dedup_triplets(const std::vector<Triplet>& triplets);

struct DatasetStats {
    std::size_t train = 0;
    std::size_t validation = 0;
    std::size_t test = 0;
    std::size_t relations = 0;
    std::size_t max_triplets = 0;
    double avg_triplets = 0.0;
};

struct Dataset {
    std::vector<AnnotatedSentence> train;
    std::vector<AnnotatedSentence> validation;
    std::vector<AnnotatedSentence> test;
    std::vector<std::string> relation_vocab;  // sorted
    std::size_t max_triplets = 0;
    double avg_triplets = 0.0;

    DatasetStats stats() const;
};

/// Fill relation_vocab, max_triplets and avg_triplets from the splits.
void compute_dataset_fields(Dataset& dataset);

enum class DatasetFormat {
    Manifest,    // JSON {"train": path, "validation": path, "test": path}
    SingleFile,  // one JSONL file, loaded as the test split
};

/// Parse one JSONL split. Errors: RecordError (with line number) for a
/// malformed record, Error{EmptySplit} when the file holds no records.
std::vector<AnnotatedSentence> load_split(const std::filesystem::path& path);
void save_split(const std::filesystem::path& path,
                const std::vector<AnnotatedSentence>& sentences);

/// Per-line triplet lists for scoring: each JSONL line is either a record
/// {"triplets": [[s, p, o], ...], ...} or a bare array of triplets. Empty
/// lists are allowed.
std::vector<std::vector<Triplet>> load_triplet_lists(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path,
                     DatasetFormat format = DatasetFormat::Manifest);

/// Write three JSONL splits plus a manifest into `dir`; returns the manifest path.
std::filesystem::path save_dataset(const std::filesystem::path& dir, const Dataset& dataset);

struct KnowledgeBase {
    std::vector<Triplet> triplets;  // union of example gold sets, deduplicated
    std::vector<AnnotatedSentence> examples;
    double source_scale = 1.0;

    bool empty() const { return examples.empty(); }
};

KnowledgeBase build_kb(const std::vector<AnnotatedSentence>& train,
                       const std::vector<AnnotatedSentence>& validation);

/// Keep floor(scale * |examples|) examples drawn uniformly without
/// replacement. The retained set is the prefix of a seed-determined
/// permutation, so for a fixed seed smaller scales give subsets of larger
/// ones. Retained examples stay in their original order.
KnowledgeBase downscale_kb(const KnowledgeBase& kb, double scale, std::uint64_t seed);

}  // namespace kgte

template <>
struct std::hash<kgte::Triplet> : kgte::TripletHash {};
