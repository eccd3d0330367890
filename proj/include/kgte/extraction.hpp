#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "kgte/corpus.hpp"
#include "kgte/http.hpp"
#include "kgte/prompting.hpp"
#include "kgte/retriever.hpp"

namespace kgte {

inline constexpr double kDefaultTemperature = 0.1;

struct GenerationConfig {
    double temperature = kDefaultTemperature;
    std::size_t max_output_tokens = 512;
    std::string model = "llama-65b";
    std::string base_url;  // e.g. http://localhost:8000/v1
    std::string api_key_env = "KGTE_API_KEY";
    std::chrono::milliseconds request_timeout{60000};
    RetryPolicy retry;
    std::size_t max_in_flight = 4;

    void validate() const;
};

enum class ExtractorKind { RemoteLlm, OracleGold, OracleContextPrefix, RandomBaseline };

std::string to_string(ExtractorKind kind);
ExtractorKind parse_extractor_kind(std::string_view s);  // llm | oracle-gold | oracle-prefix | random
bool is_pure(ExtractorKind kind);

struct ModelMeta {
    std::string id;
    double parameters_billions = 0.0;
    std::size_t context_window = 0;
};

/// Parameter counts and context windows of the evaluated model families.
const std::vector<ModelMeta>& model_catalog();
std::optional<ModelMeta> find_model(std::string_view id);

struct RequestLogEntry {
    std::string run_id;
    std::size_t sequence = 0;
    std::string request;
    std::string response;
    int status = 0;
    std::size_t attempts = 0;
};

/// Append-only, thread-safe.
class RequestLog {
public:
    void append(RequestLogEntry entry);
    std::vector<RequestLogEntry> entries() const;
    std::size_t size() const;

private:
    mutable std::mutex mutex_;
    std::vector<RequestLogEntry> entries_;
};

/// Chat-completions client: POST {base_url}/chat/completions with
/// {"model", "temperature", "max_tokens", "messages": [{"role": "user", ...}]}
/// and returns choices[0].message.content.
class ChatClient {
public:
    ChatClient(GenerationConfig config, std::shared_ptr<HttpTransport> transport,
               std::string run_id = "run");

    /// Retries transient faults per `config.retry`. Throws RemoteError
    /// (Transport when retries are exhausted, Api for non-success status)
    /// or Error{Parse} for an unexpected response shape.
    std::string generate(const PromptInstance& prompt);

    const RequestLog& log() const { return log_; }
    const GenerationConfig& config() const { return config_; }

    /// Injected into retries; defaults to std::this_thread::sleep_for.
    void set_sleep(std::function<void(std::chrono::milliseconds)> sleep) { sleep_ = std::move(sleep); }

private:
    GenerationConfig config_;
    std::shared_ptr<HttpTransport> transport_;
    std::string run_id_;
    std::string api_key_;
    RequestLog log_;
    InFlightLimiter limiter_;
    std::function<void(std::chrono::milliseconds)> sleep_;
    std::mutex seq_mutex_;
    std::size_t next_seq_ = 0;
};

std::string build_chat_request(const GenerationConfig& config, std::string_view prompt);
std::string parse_chat_response(std::string_view body);

/// Independent stream for one sentence; depends only on (master, index).
std::mt19937_64 sentence_rng(std::uint64_t master_seed, std::uint64_t index);

/// Draw n uniformly in [1, max_triplets], then min(n, |context|) distinct
/// triplets uniformly from the context triplet set. Output keeps context
/// order. Empty context gives an empty prediction.
std::vector<Triplet> random_extract(const RetrievedContext& context, std::size_t max_triplets,
                                    std::mt19937_64& rng);

/// (p / n_kb)^n. An empirical approximation of the random model's F1,
/// not an exact expectation.
double random_f1_closed_form(double p, std::size_t n_kb, std::size_t n);

/// Exact expected per-sentence F1 of `random_extract`, by enumerating every
/// (n, subset) outcome. Throws Error{InvalidArgument} when the context
/// holds more than `kMaxExhaustiveContext` triplets.
inline constexpr std::size_t kMaxExhaustiveContext = 12;
double random_f1_exhaustive(const std::vector<Triplet>& context, const std::vector<Triplet>& gold,
                            std::size_t max_triplets);

/// OracleGold returns the gold set; OracleContextPrefix returns the first
/// min(max_triplets, |context|) context triplets.
std::vector<Triplet> oracle_extract(ExtractorKind kind, const AnnotatedSentence& sentence,
                                    const RetrievedContext* context, std::size_t max_triplets);

}  // namespace kgte
