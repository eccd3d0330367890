#include "kgte/vector_index.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "kgte/error.hpp"

namespace kgte {

using nlohmann::json;

namespace {

// Below this many nodes the OpenMP fork costs more than the scan.
constexpr std::size_t kParallelScanCutoff = 4096;

bool ranks_before(const ScoredNode& a, const ScoredNode& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.id < b.id;
}

}  // namespace

std::string to_string(NodeKind kind) { return kind == NodeKind::Triplet ? "triplet" : "example"; }

std::string to_string(ExampleEmbedMode mode) {
    return mode == ExampleEmbedMode::SentenceOnly ? "sentence" : "sentence+triplets";
}

NodeKind parse_node_kind(std::string_view s) {
    if (s == "triplet") return NodeKind::Triplet;
    if (s == "example") return NodeKind::Example;
    throw Error(ErrorCode::InvalidArgument, "unknown index kind: " + std::string(s));
}

ExampleEmbedMode parse_embed_mode(std::string_view s) {
    if (s == "sentence" || s == "sentence-only") return ExampleEmbedMode::SentenceOnly;
    if (s == "sentence+triplets") return ExampleEmbedMode::SentenceAndTriplets;
    throw Error(ErrorCode::InvalidArgument, "unknown embed mode: " + std::string(s));
}

void VectorIndex::check_query(const EmbeddingVector& query, std::size_t k) const {
    if (query.dimension() != dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(query.dimension()) +
                                                      " does not match index dimension " +
                                                      std::to_string(dimension_));
    }
    if (k == 0) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
}

std::vector<ScoredNode> VectorIndex::select(std::vector<double> scores, std::size_t k) const {
    std::vector<ScoredNode> ranked(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) ranked[i] = {i, scores[i]};
    const std::size_t keep = std::min(k, ranked.size());
    if (keep < ranked.size()) {
        std::nth_element(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                         ranks_before);
        ranked.resize(keep);
    }
    std::sort(ranked.begin(), ranked.end(), ranks_before);
    return ranked;
}

std::vector<ScoredNode> VectorIndex::top_k(const EmbeddingVector& query, std::size_t k) const {
    check_query(query, k);
    const std::size_t n = nodes_.size();
    const std::size_t d = dimension_;
    std::vector<double> scores(n);
    const std::span<const float> q = query.values();
    const float* base = matrix_.data();
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) if (n >= kParallelScanCutoff)
    for (std::ptrdiff_t i = 0; i < count; ++i) {
        const auto row = std::span<const float>(base + static_cast<std::size_t>(i) * d, d);
        scores[static_cast<std::size_t>(i)] = std::clamp(dot(q, row), -1.0, 1.0);
    }
    return select(std::move(scores), k);
}

std::vector<ScoredNode> VectorIndex::top_k_serial(const EmbeddingVector& query, std::size_t k) const {
    check_query(query, k);
    std::vector<ScoredNode> all;
    all.reserve(nodes_.size());
    for (const auto& node : nodes_) all.push_back({node.id, cosine(query, node.vector)});
    std::stable_sort(all.begin(), all.end(),
                     [](const ScoredNode& a, const ScoredNode& b) { return a.score > b.score; });
    all.resize(std::min(k, all.size()));
    return all;
}

bool VectorIndex::operator==(const VectorIndex& other) const {
    if (dimension_ != other.dimension_ || kind_ != other.kind_ || fingerprint_ != other.fingerprint_ ||
        nodes_.size() != other.nodes_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& a = nodes_[i];
        const auto& b = other.nodes_[i];
        if (a.id != b.id || a.payload != b.payload || !(a.vector == b.vector)) return false;
    }
    return true;
}

IndexBuilder::IndexBuilder(std::size_t dimension, NodeKind kind, std::string encoder_fingerprint) {
    if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "index dimension must be > 0");
    index_.dimension_ = dimension;
    index_.kind_ = kind;
    index_.fingerprint_ = std::move(encoder_fingerprint);
}

void IndexBuilder::add(NodePayload payload, EmbeddingVector vector) {
    if (frozen_) throw std::logic_error("IndexBuilder::add after finalize");
    const NodeKind kind = std::holds_alternative<Triplet>(payload) ? NodeKind::Triplet : NodeKind::Example;
    if (kind != index_.kind_) {
        throw Error(ErrorCode::InvalidArgument, "node kind does not match index kind " + to_string(index_.kind_));
    }
    if (vector.dimension() != index_.dimension_) {
        throw Error(ErrorCode::DimensionMismatch, "node vector dimension " + std::to_string(vector.dimension()) +
                                                      " != " + std::to_string(index_.dimension_));
    }
    const auto values = vector.values();
    index_.matrix_.insert(index_.matrix_.end(), values.begin(), values.end());
    index_.nodes_.push_back(IndexNode{index_.nodes_.size(), std::move(payload), std::move(vector)});
}

VectorIndex IndexBuilder::finalize() {
    if (frozen_) throw std::logic_error("IndexBuilder::finalize called twice");
    frozen_ = true;
    return std::move(index_);
}

std::string example_embedding_text(const AnnotatedSentence& example, ExampleEmbedMode mode) {
    if (mode == ExampleEmbedMode::SentenceOnly) return example.text;
    std::string text = example.text;
    for (const auto& t : example.gold) {
        text += '\n';
        text += triplet_to_string(t);
    }
    return text;
}

VectorIndex build_index(const KnowledgeBase& kb, NodeKind kind, ExampleEmbedMode mode,
                        const Encoder& encoder) {
    std::vector<std::string> texts;
    if (kind == NodeKind::Triplet) {
        if (kb.triplets.empty()) throw Error(ErrorCode::EmptyInput, "knowledge base has no triplets");
        texts.reserve(kb.triplets.size());
        for (const auto& t : kb.triplets) texts.push_back(triplet_to_string(t));
    } else {
        if (kb.examples.empty()) throw Error(ErrorCode::EmptyInput, "knowledge base has no examples");
        texts.reserve(kb.examples.size());
        for (const auto& e : kb.examples) texts.push_back(example_embedding_text(e, mode));
    }
    auto vectors = encoder.encode_batch(texts);

    IndexBuilder builder(encoder.dimension(), kind, encoder.fingerprint());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (kind == NodeKind::Triplet) {
            builder.add(kb.triplets[i], std::move(vectors[i]));
        } else {
            builder.add(kb.examples[i], std::move(vectors[i]));
        }
    }
    return builder.finalize();
}

namespace {

json triplet_json(const Triplet& t) { return json::array({t.subject, t.predicate, t.object}); }

json payload_json(const NodePayload& payload) {
    if (const auto* t = std::get_if<Triplet>(&payload)) return triplet_json(*t);
    const auto& e = std::get<AnnotatedSentence>(payload);
    json gold = json::array();
    for (const auto& t : e.gold) gold.push_back(triplet_json(t));
    return {{"text", e.text}, {"triplets", std::move(gold)}};
}

// 9 significant digits round-trip every float exactly.
double nine_digits(float x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(x));
    return std::strtod(buf, nullptr);
}

Triplet triplet_from_json(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, "triplet payload must be a 3-array");
    return Triplet::make(j[0].get<std::string>(), j[1].get<std::string>(), j[2].get<std::string>());
}

NodePayload payload_from_json(const json& j, NodeKind kind) {
    if (kind == NodeKind::Triplet) return triplet_from_json(j);
    AnnotatedSentence e;
    e.text = j.at("text").get<std::string>();
    for (const auto& t : j.at("triplets")) e.gold.push_back(triplet_from_json(t));
    return e;
}

}  // namespace

void save_index(const VectorIndex& index, const std::filesystem::path& path) {
    json nodes = json::array();
    for (const auto& node : index.nodes()) {
        json vec = json::array();
        for (float x : node.vector.values()) vec.push_back(nine_digits(x));
        nodes.push_back({{"id", node.id}, {"payload", payload_json(node.payload)}, {"vector", std::move(vec)}});
    }
    json doc = {{"version", kIndexFormatVersion},
                {"dimension", index.dimension()},
                {"metric", "cosine"},
                {"kind", to_string(index.kind())},
                {"encoder", index.encoder_fingerprint()},
                {"nodes", std::move(nodes)}};
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    out << doc.dump() << '\n';
    if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

VectorIndex load_index(const std::filesystem::path& path, const std::optional<std::string>& expected_fingerprint) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string text = buffer.str();

    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DocumentParseError(e.byte, e.what());
    }

    try {
        const int version = doc.at("version").get<int>();
        if (version != kIndexFormatVersion) {
            throw Error(ErrorCode::VersionMismatch, "index format version " + std::to_string(version) +
                                                        " is not supported (expected " +
                                                        std::to_string(kIndexFormatVersion) + ")");
        }
        if (doc.at("metric").get<std::string>() != "cosine") {
            throw Error(ErrorCode::Parse, "unsupported metric " + doc.at("metric").get<std::string>());
        }
        const auto dimension = doc.at("dimension").get<std::size_t>();
        const auto kind = parse_node_kind(doc.at("kind").get<std::string>());
        const auto fingerprint = doc.at("encoder").get<std::string>();
        if (expected_fingerprint && *expected_fingerprint != fingerprint) {
            throw Error(ErrorCode::DimensionMismatch, "index was built with encoder '" + fingerprint +
                                                          "' but '" + *expected_fingerprint +
                                                          "' is configured");
        }

        IndexBuilder builder(dimension, kind, fingerprint);
        std::size_t expected_id = 0;
        for (const auto& node : doc.at("nodes")) {
            if (node.at("id").get<std::size_t>() != expected_id) {
                throw Error(ErrorCode::Parse, "node ids must be contiguous from 0");
            }
            auto values = node.at("vector").get<std::vector<float>>();
            if (values.size() != dimension) {
                throw Error(ErrorCode::DimensionMismatch, "node " + std::to_string(expected_id) +
                                                              " has dimension " + std::to_string(values.size()));
            }
            builder.add(payload_from_json(node.at("payload"), kind), EmbeddingVector::adopt(std::move(values)));
            ++expected_id;
        }
        return builder.finalize();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed index document: ") + e.what());
    }
}

}  // namespace kgte
