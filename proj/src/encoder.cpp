#include "kgte/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "json.hpp"
#include "kgte/error.hpp"

namespace kgte {

using nlohmann::json;

namespace {

double l2_norm(const std::vector<float>& v) {
    double sum = 0.0;
    for (float x : v) sum += static_cast<double>(x) * static_cast<double>(x);
    return std::sqrt(sum);
}

// Byte offsets of UTF-8 code point starts, plus the end offset.
std::vector<std::size_t> codepoint_offsets(std::string_view s) {
    std::vector<std::size_t> offsets;
    offsets.reserve(s.size() + 1);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto c = static_cast<unsigned char>(s[i]);
        if ((c & 0xC0) != 0x80) offsets.push_back(i);
    }
    offsets.push_back(s.size());
    return offsets;
}

}  // namespace

EmbeddingVector EmbeddingVector::normalized(std::vector<float> values) {
    const double norm = l2_norm(values);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::EmptyInput, "cannot normalize a zero or non-finite vector");
    }
    for (auto& x : values) x = static_cast<float>(static_cast<double>(x) / norm);
    return EmbeddingVector(std::move(values));
}

EmbeddingVector EmbeddingVector::adopt(std::vector<float> values) {
    const double norm = l2_norm(values);
    if (std::abs(norm - 1.0) <= 1e-6) return EmbeddingVector(std::move(values));
    return normalized(std::move(values));
}

double dot(std::span<const float> a, std::span<const float> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sum += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    }
    return sum;
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cosine of vectors with dimensions " + std::to_string(a.dimension()) + " and " +
                        std::to_string(b.dimension()));
    }
    return std::clamp(dot(a.values(), b.values()), -1.0, 1.0);
}

std::string triplet_to_string(const Triplet& t) {
    std::string out;
    out.reserve(t.subject.size() + t.predicate.size() + t.object.size() + 6);
    out += '(';
    out += t.subject;
    out += ", ";
    out += t.predicate;
    out += ", ";
    out += t.object;
    out += ')';
    return out;
}

void EncoderConfig::validate() const {
    if (dimension == 0) throw Error(ErrorCode::InvalidArgument, "encoder dimension must be > 0");
    if (provider == EncoderProvider::HashedNgram && (ngram_min == 0 || ngram_min > ngram_max)) {
        throw Error(ErrorCode::InvalidArgument, "ngram range must satisfy 1 <= min <= max");
    }
    if (provider == EncoderProvider::External && endpoint.empty()) {
        throw Error(ErrorCode::InvalidArgument, "external encoder requires an endpoint");
    }
}

std::string EncoderConfig::fingerprint() const {
    std::ostringstream out;
    if (provider == EncoderProvider::HashedNgram) {
        out << "hashed-ngram/fnv1a64/v1;d=" << dimension << ";n=" << ngram_min << "-" << ngram_max;
    } else {
        out << "external;d=" << dimension << ";model=" << model;
    }
    return out.str();
}

std::vector<EmbeddingVector> Encoder::encode_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(encode(t));
    return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

HashedNgramEncoder::HashedNgramEncoder(const EncoderConfig& config)
    : dimension_(config.dimension),
      ngram_min_(config.ngram_min),
      ngram_max_(config.ngram_max),
      fingerprint_(config.fingerprint()) {
    config.validate();
}

EmbeddingVector HashedNgramEncoder::encode(std::string_view text) const {
    if (normalize_surface(text).empty()) {
        throw Error(ErrorCode::EmptyInput, "cannot encode empty text");
    }
    std::string lowered(text);
    for (auto& c : lowered) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    const auto offsets = codepoint_offsets(lowered);
    const std::size_t length = offsets.size() - 1;

    std::vector<float> buckets(dimension_, 0.0f);
    auto add = [&](std::size_t from, std::size_t to) {
        const auto gram = std::string_view(lowered).substr(offsets[from], offsets[to] - offsets[from]);
        buckets[fnv1a64(gram) % dimension_] += 1.0f;
    };
    if (length < ngram_min_) {
        add(0, length);
    } else {
        for (std::size_t n = ngram_min_; n <= ngram_max_ && n <= length; ++n) {
            for (std::size_t i = 0; i + n <= length; ++i) add(i, i + n);
        }
    }
    return EmbeddingVector::normalized(std::move(buckets));
}

std::vector<EmbeddingVector> HashedNgramEncoder::encode_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out(texts.size());
    const auto n = static_cast<std::ptrdiff_t>(texts.size());
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            out[static_cast<std::size_t>(i)] = encode(texts[static_cast<std::size_t>(i)]);
        } catch (...) {
#pragma omp critical(kgte_encode_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);
    return out;
}

std::vector<EmbeddingVector> HashedNgramEncoder::encode_batch_serial(std::span<const std::string> texts) const {
    return Encoder::encode_batch(texts);
}

ExternalEncoder::ExternalEncoder(const EncoderConfig& config, std::shared_ptr<HttpTransport> transport)
    : config_(config),
      transport_(std::move(transport)),
      api_key_(env_or_empty(config.api_key_env)),
      limiter_(config.max_in_flight) {
    config_.validate();
    if (!transport_) throw Error(ErrorCode::InvalidArgument, "external encoder requires a transport");
}

std::vector<EmbeddingVector> ExternalEncoder::request(std::span<const std::string> texts) const {
    json body = {{"model", config_.model}, {"input", json::array()}};
    for (const auto& t : texts) {
        if (normalize_surface(t).empty()) throw Error(ErrorCode::EmptyInput, "cannot encode empty text");
        body["input"].push_back(t);
    }
    std::map<std::string, std::string> headers;
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;

    HttpResponse response;
    {
        auto slot = limiter_.acquire_slot();
        response = post_with_retry(*transport_, config_.endpoint, body.dump(), headers, config_.retry);
    }

    std::vector<EmbeddingVector> out;
    try {
        const auto doc = json::parse(response.body);
        const auto& data = doc.at("data");
        if (!data.is_array() || data.size() != texts.size()) {
            throw Error(ErrorCode::Parse, "embeddings response has " + std::to_string(data.size()) +
                                              " items for " + std::to_string(texts.size()) + " inputs");
        }
        for (const auto& item : data) {
            auto values = item.at("embedding").get<std::vector<float>>();
            if (values.size() != config_.dimension) {
                throw Error(ErrorCode::DimensionMismatch,
                            "embedding has dimension " + std::to_string(values.size()) + ", expected " +
                                std::to_string(config_.dimension));
            }
            out.push_back(EmbeddingVector::normalized(std::move(values)));
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("unexpected embeddings response: ") + e.what());
    }
    return out;
}

EmbeddingVector ExternalEncoder::encode(std::string_view text) const {
    const std::string t(text);
    return request(std::span<const std::string>(&t, 1)).front();
}

std::vector<EmbeddingVector> ExternalEncoder::encode_batch(std::span<const std::string> texts) const {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    const std::size_t step = std::max<std::size_t>(1, config_.batch_size);
    for (std::size_t i = 0; i < texts.size(); i += step) {
        auto part = request(texts.subspan(i, std::min(step, texts.size() - i)));
        std::move(part.begin(), part.end(), std::back_inserter(out));
    }
    return out;
}

std::unique_ptr<Encoder> make_encoder(const EncoderConfig& config) {
    config.validate();
    if (config.provider == EncoderProvider::External) {
        return std::make_unique<ExternalEncoder>(config, std::make_shared<HttplibTransport>());
    }
    return std::make_unique<HashedNgramEncoder>(config);
}

}  // namespace kgte
