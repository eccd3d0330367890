#include "kgte/extraction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <thread>

#include "json.hpp"
#include "kgte/error.hpp"
#include "kgte/evaluation.hpp"

namespace kgte {

using nlohmann::json;

void GenerationConfig::validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature must be >= 0");
    if (max_output_tokens == 0) throw Error(ErrorCode::InvalidArgument, "max_output_tokens must be >= 1");
}

std::string to_string(ExtractorKind kind) {
    switch (kind) {
        case ExtractorKind::RemoteLlm: return "llm";
        case ExtractorKind::OracleGold: return "oracle-gold";
        case ExtractorKind::OracleContextPrefix: return "oracle-prefix";
        case ExtractorKind::RandomBaseline: return "random";
    }
    return "llm";
}

ExtractorKind parse_extractor_kind(std::string_view s) {
    if (s == "llm" || s == "remote_llm") return ExtractorKind::RemoteLlm;
    if (s == "oracle-gold" || s == "oracle_gold") return ExtractorKind::OracleGold;
    if (s == "oracle-prefix" || s == "oracle_context_prefix") return ExtractorKind::OracleContextPrefix;
    if (s == "random" || s == "random_baseline") return ExtractorKind::RandomBaseline;
    throw Error(ErrorCode::InvalidArgument, "unknown extractor: " + std::string(s));
}

bool is_pure(ExtractorKind kind) { return kind != ExtractorKind::RemoteLlm; }

const std::vector<ModelMeta>& model_catalog() {
    // Parameter counts for gpt-3.5 / gpt-4 are unofficial estimates.
    static const std::vector<ModelMeta> models = {
        {"gpt2-base", 0.1, 1024},   {"gpt2-xl", 1.5, 1024},    {"falcon-7b", 7.0, 2048},
        {"falcon-40b", 40.0, 2048}, {"llama-13b", 13.0, 2048}, {"llama-65b", 65.0, 2048},
        {"gpt-3.5", 175.0, 4096},   {"gpt-4", 1760.0, 8192},
    };
    return models;
}

std::optional<ModelMeta> find_model(std::string_view id) {
    for (const auto& m : model_catalog()) {
        if (m.id == id) return m;
    }
    return std::nullopt;
}

void RequestLog::append(RequestLogEntry entry) {
    std::lock_guard lock(mutex_);
    entries_.push_back(std::move(entry));
}

std::vector<RequestLogEntry> RequestLog::entries() const {
    std::lock_guard lock(mutex_);
    return entries_;
}

std::size_t RequestLog::size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
}

namespace {

// Holds an in-flight slot per attempt, not across backoff sleeps.
class CountingTransport final : public HttpTransport {
public:
    CountingTransport(HttpTransport& inner, InFlightLimiter& limiter) : inner_(inner), limiter_(limiter) {}

    HttpResponse post_json(const std::string& url, const std::string& body,
                           const std::map<std::string, std::string>& headers) override {
        auto slot = limiter_.acquire_slot();
        ++attempts;
        return inner_.post_json(url, body, headers);
    }

    std::size_t attempts = 0;

private:
    HttpTransport& inner_;
    InFlightLimiter& limiter_;
};

}  // namespace

std::string build_chat_request(const GenerationConfig& config, std::string_view prompt) {
    json body = {{"model", config.model},
                 {"temperature", config.temperature},
                 {"max_tokens", config.max_output_tokens},
                 {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})}};
    return body.dump();
}

std::string parse_chat_response(std::string_view body) {
    try {
        const auto doc = json::parse(body);
        const auto& choices = doc.at("choices");
        if (!choices.is_array() || choices.empty()) throw Error(ErrorCode::Parse, "response has no choices");
        const auto& content = choices.at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("unexpected chat response: ") + e.what());
    }
}

ChatClient::ChatClient(GenerationConfig config, std::shared_ptr<HttpTransport> transport, std::string run_id)
    : config_(std::move(config)),
      transport_(std::move(transport)),
      run_id_(std::move(run_id)),
      api_key_(env_or_empty(config_.api_key_env)),
      limiter_(config_.max_in_flight) {
    config_.validate();
    if (config_.base_url.empty()) throw Error(ErrorCode::InvalidArgument, "remote generation needs --llm-url");
    if (!transport_) throw Error(ErrorCode::InvalidArgument, "chat client requires a transport");
}

std::string ChatClient::generate(const PromptInstance& prompt) {
    std::string url = config_.base_url;
    while (!url.empty() && url.back() == '/') url.pop_back();
    url += "/chat/completions";
    const std::string body = build_chat_request(config_, prompt.rendered);
    std::map<std::string, std::string> headers;
    if (!api_key_.empty()) headers["Authorization"] = "Bearer " + api_key_;

    std::size_t seq;
    {
        std::lock_guard lock(seq_mutex_);
        seq = next_seq_++;
    }
    CountingTransport counting(*transport_, limiter_);

    try {
        auto response = post_with_retry(counting, url, body, headers, config_.retry, sleep_);
        log_.append({run_id_, seq, body, response.body, response.status, counting.attempts});
        return parse_chat_response(response.body);
    } catch (const RemoteError& e) {
        log_.append({run_id_, seq, body, e.what(), e.status(), counting.attempts});
        throw;
    }
}

std::mt19937_64 sentence_rng(std::uint64_t master_seed, std::uint64_t index) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
    return std::mt19937_64(seq);
}

std::vector<Triplet> random_extract(const RetrievedContext& context, std::size_t max_triplets,
                                    std::mt19937_64& rng) {
    if (max_triplets == 0) throw Error(ErrorCode::InvalidArgument, "max_triplets must be >= 1");
    const auto pool = context.triplet_set();
    if (pool.empty()) return {};
    std::uniform_int_distribution<std::size_t> pick_n(1, max_triplets);
    const std::size_t n = std::min(pick_n(rng), pool.size());
    std::vector<Triplet> out;
    out.reserve(n);
    std::sample(pool.begin(), pool.end(), std::back_inserter(out), n, rng);
    return out;
}

double random_f1_closed_form(double p, std::size_t n_kb, std::size_t n) {
    if (n_kb == 0 || n == 0) throw Error(ErrorCode::InvalidArgument, "n_kb and n must be >= 1");
    return std::pow(p / static_cast<double>(n_kb), static_cast<double>(n));
}

double random_f1_exhaustive(const std::vector<Triplet>& context, const std::vector<Triplet>& gold,
                            std::size_t max_triplets) {
    if (max_triplets == 0) throw Error(ErrorCode::InvalidArgument, "max_triplets must be >= 1");
    const auto pool = dedup_triplets(context);
    if (pool.size() > kMaxExhaustiveContext) {
        throw Error(ErrorCode::InvalidArgument, "context too large for exhaustive enumeration");
    }
    const auto gold_set = dedup_triplets(gold);
    if (pool.empty() || gold_set.empty()) return 0.0;

    const std::size_t c = pool.size();
    // Mean F1 over all subsets of each size.
    std::vector<double> f1_sum(c + 1, 0.0);
    std::vector<double> subsets(c + 1, 0.0);
    for (std::uint32_t mask = 0; mask < (1u << c); ++mask) {
        std::vector<Triplet> chosen;
        for (std::size_t i = 0; i < c; ++i) {
            if (mask & (1u << i)) chosen.push_back(pool[i]);
        }
        const std::size_t size = chosen.size();
        Counts counts{count_matches(chosen, gold_set), size, gold_set.size()};
        f1_sum[size] += counts.f1();
        subsets[size] += 1.0;
    }
    double expectation = 0.0;
    for (std::size_t n = 1; n <= max_triplets; ++n) {
        const std::size_t m = std::min(n, c);
        expectation += f1_sum[m] / subsets[m];
    }
    return expectation / static_cast<double>(max_triplets);
}

std::vector<Triplet> oracle_extract(ExtractorKind kind, const AnnotatedSentence& sentence,
                                    const RetrievedContext* context, std::size_t max_triplets) {
    switch (kind) {
        case ExtractorKind::OracleGold: return sentence.gold;
        case ExtractorKind::OracleContextPrefix: {
            if (context == nullptr) return {};
            auto pool = context->triplet_set();
            pool.resize(std::min(max_triplets, pool.size()));
            return pool;
        }
        default: throw Error(ErrorCode::InvalidArgument, "not an oracle extractor: " + to_string(kind));
    }
}

}  // namespace kgte
