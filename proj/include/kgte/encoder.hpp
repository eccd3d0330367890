#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/http.hpp"

namespace kgte {

/// Unit-norm embedding. Only produced by encoders (which normalize) or
/// by `EmbeddingVector::normalized`; zero vectors are rejected.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// L2-normalize `values`. Throws Error{EmptyInput} on a zero vector.
    static EmbeddingVector normalized(std::vector<float> values);

    /// Adopt values that are already unit norm (within 1e-6) without
    /// touching their bits; otherwise normalize. Used when loading indexes.
    static EmbeddingVector adopt(std::vector<float> values);

    std::size_t dimension() const { return values_.size(); }
    std::span<const float> values() const { return values_; }
    float operator[](std::size_t i) const { return values_[i]; }

    friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;

private:
    explicit EmbeddingVector(std::vector<float> v) : values_(std::move(v)) {}
    std::vector<float> values_;
};

/// Dot product accumulated in double, coordinate order 0..D-1. Shared by
/// every scoring path so scores are bit-identical between them.
double dot(std::span<const float> a, std::span<const float> b);

/// Cosine of two unit vectors, clamped to [-1, 1].
/// Throws Error{DimensionMismatch}.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

/// "(subject, predicate, object)"
std::string triplet_to_string(const Triplet& t);

enum class EncoderProvider { HashedNgram, External };

struct EncoderConfig {
    EncoderProvider provider = EncoderProvider::HashedNgram;
    std::size_t dimension = 384;
    std::size_t ngram_min = 3;
    std::size_t ngram_max = 5;
    // external provider only
    std::string endpoint;  // full URL of the embeddings endpoint
    std::string model;
    std::string api_key_env = "KGTE_API_KEY";
    RetryPolicy retry;
    std::size_t max_in_flight = 4;
    std::size_t batch_size = 64;

    void validate() const;
    /// Stable identifier stored in index files; two configs with equal
    /// fingerprints produce identical vectors.
    std::string fingerprint() const;
};

class Encoder {
public:
    virtual ~Encoder() = default;

    virtual std::size_t dimension() const = 0;
    virtual std::string fingerprint() const = 0;

    /// Throws Error{EmptyInput} when `text` is empty after normalization.
    virtual EmbeddingVector encode(std::string_view text) const = 0;

    virtual std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const;
};

/// Character n-gram feature hashing into D buckets with FNV-1a 64.
/// N-grams are taken over UTF-8 code points of the ASCII-lowercased text;
/// a text shorter than ngram_min code points contributes itself as one gram.
class HashedNgramEncoder final : public Encoder {
public:
    explicit HashedNgramEncoder(const EncoderConfig& config);

    std::size_t dimension() const override { return dimension_; }
    std::string fingerprint() const override { return fingerprint_; }
    EmbeddingVector encode(std::string_view text) const override;

    /// OpenMP-parallel over texts.
    std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const override;
    /// Serial reference for `encode_batch`.
    std::vector<EmbeddingVector> encode_batch_serial(std::span<const std::string> texts) const;

private:
    std::size_t dimension_;
    std::size_t ngram_min_;
    std::size_t ngram_max_;
    std::string fingerprint_;
};

/// Client for an embeddings endpoint: POST {"model", "input": [...]},
/// expects {"data": [{"embedding": [...]}, ...]}.
class ExternalEncoder final : public Encoder {
public:
    ExternalEncoder(const EncoderConfig& config, std::shared_ptr<HttpTransport> transport);

    std::size_t dimension() const override { return config_.dimension; }
    std::string fingerprint() const override { return config_.fingerprint(); }
    EmbeddingVector encode(std::string_view text) const override;
    std::vector<EmbeddingVector> encode_batch(std::span<const std::string> texts) const override;

private:
    std::vector<EmbeddingVector> request(std::span<const std::string> texts) const;

    EncoderConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::string api_key_;
    mutable InFlightLimiter limiter_;
};

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace kgte
