#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"

namespace kgte {

enum class NodeKind { Triplet, Example };
enum class ExampleEmbedMode { SentenceOnly, SentenceAndTriplets };

std::string to_string(NodeKind kind);
std::string to_string(ExampleEmbedMode mode);
NodeKind parse_node_kind(std::string_view s);
ExampleEmbedMode parse_embed_mode(std::string_view s);

using NodePayload = std::variant<Triplet, AnnotatedSentence>;

struct IndexNode {
    std::size_t id = 0;
    NodePayload payload;
    EmbeddingVector vector;

    NodeKind kind() const {
        return std::holds_alternative<Triplet>(payload) ? NodeKind::Triplet : NodeKind::Example;
    }
};

struct ScoredNode {
    std::size_t id = 0;
    double score = 0.0;

    friend bool operator==(const ScoredNode&, const ScoredNode&) = default;
};

/// Frozen store of (payload, unit vector) nodes with exact cosine top-k.
/// Produced by `IndexBuilder::finalize` or `load_index`.
class VectorIndex {
public:
    std::size_t dimension() const { return dimension_; }
    NodeKind kind() const { return kind_; }
    const std::string& encoder_fingerprint() const { return fingerprint_; }
    std::size_t size() const { return nodes_.size(); }
    const std::vector<IndexNode>& nodes() const { return nodes_; }
    const IndexNode& node(std::size_t id) const { return nodes_.at(id); }

    /// Ranked by descending score, ties by ascending id; min(k, size())
    /// entries. Scoring is OpenMP-parallel over nodes above a size cutoff.
    /// Throws Error{DimensionMismatch} or Error{InvalidArgument} for k == 0.
    std::vector<ScoredNode> top_k(const EmbeddingVector& query, std::size_t k) const;

    /// Single-threaded reference for `top_k`. Identical output.
    std::vector<ScoredNode> top_k_serial(const EmbeddingVector& query, std::size_t k) const;

    bool operator==(const VectorIndex& other) const;

private:
    friend class IndexBuilder;
    friend VectorIndex load_index(const std::filesystem::path&, const std::optional<std::string>&);

    VectorIndex() = default;
    void check_query(const EmbeddingVector& query, std::size_t k) const;
    std::vector<ScoredNode> select(std::vector<double> scores, std::size_t k) const;

    std::size_t dimension_ = 0;
    NodeKind kind_ = NodeKind::Triplet;
    std::string fingerprint_;
    std::vector<IndexNode> nodes_;
    std::vector<float> matrix_;  // row-major copy of node vectors
};

/// Append-only builder. `finalize` freezes it; any later `add` throws
/// std::logic_error.
class IndexBuilder {
public:
    IndexBuilder(std::size_t dimension, NodeKind kind, std::string encoder_fingerprint);

    void add(NodePayload payload, EmbeddingVector vector);
    VectorIndex finalize();
    bool frozen() const { return frozen_; }

private:
    VectorIndex index_;
    bool frozen_ = false;
};

/// Text embedded for an example node: the sentence alone, or the sentence
/// followed by each gold triplet string, newline-joined.
std::string example_embedding_text(const AnnotatedSentence& example, ExampleEmbedMode mode);

/// Throws Error{EmptyInput} when the KB has nothing of the requested kind.
VectorIndex build_index(const KnowledgeBase& kb, NodeKind kind, ExampleEmbedMode mode,
                        const Encoder& encoder);

inline constexpr int kIndexFormatVersion = 1;

void save_index(const VectorIndex& index, const std::filesystem::path& path);

/// Throws DocumentParseError (with byte offset) on malformed JSON,
/// Error{VersionMismatch}, and Error{DimensionMismatch} when
/// `expected_fingerprint` is given and differs.
VectorIndex load_index(const std::filesystem::path& path,
                       const std::optional<std::string>& expected_fingerprint = std::nullopt);

}  // namespace kgte
