#include "kgte/experiment.hpp"

#include <fstream>
#include <optional>

#include "json.hpp"
#include "kgte/error.hpp"
#include "kgte/parsing.hpp"

namespace kgte {

using nlohmann::ordered_json;

std::string to_string(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::Zero: return "zero";
        case ExperimentMode::StaticTwoShot: return "static2";
        case ExperimentMode::Triplets: return "triplets";
        case ExperimentMode::Examples: return "examples";
    }
    return "zero";
}

ExperimentMode parse_experiment_mode(std::string_view s) {
    if (s == "zero") return ExperimentMode::Zero;
    if (s == "static2") return ExperimentMode::StaticTwoShot;
    if (s == "triplets" || s == "triplets-0.5shot") return ExperimentMode::Triplets;
    if (s == "examples" || s == "examples-fewshot") return ExperimentMode::Examples;
    throw Error(ErrorCode::InvalidArgument, "unknown mode: " + std::string(s));
}

ShotMode shot_mode_for(ExperimentMode mode) {
    switch (mode) {
        case ExperimentMode::Zero: return ShotMode::Zero;
        case ExperimentMode::StaticTwoShot: return ShotMode::StaticTwoShot;
        case ExperimentMode::Triplets: return ShotMode::ContextTriplets;
        case ExperimentMode::Examples: return ShotMode::Examples;
    }
    return ShotMode::Zero;
}

std::string ExperimentRunSpec::to_json() const {
    ordered_json enc = {{"provider", encoder.provider == EncoderProvider::HashedNgram ? "hashed-ngram" : "external"},
                        {"dimension", encoder.dimension},
                        {"ngram_min", encoder.ngram_min},
                        {"ngram_max", encoder.ngram_max},
                        {"endpoint", encoder.endpoint},
                        {"model", encoder.model}};
    ordered_json gen = {{"temperature", generation.temperature},
                        {"max_output_tokens", generation.max_output_tokens},
                        {"model", generation.model},
                        {"base_url", generation.base_url},
                        {"request_timeout_ms", generation.request_timeout.count()},
                        {"max_retries", generation.retry.max_retries},
                        {"max_in_flight", generation.max_in_flight}};
    ordered_json doc = {{"manifest", manifest},
                        {"mode", to_string(mode)},
                        {"n_kb", n_kb},
                        {"kb_scale", kb_scale},
                        {"seed", seed},
                        {"extractor", to_string(extractor)},
                        {"prompt", to_string(prompt)},
                        {"embed_mode", to_string(embed_mode)},
                        {"encoder", std::move(enc)},
                        {"generation", std::move(gen)},
                        {"char_budget", char_budget ? ordered_json(*char_budget) : ordered_json(nullptr)},
                        {"limit", limit ? ordered_json(*limit) : ordered_json(nullptr)}};
    return doc.dump(2);
}

ExperimentRunSpec ExperimentRunSpec::from_json(const std::string& text) {
    ExperimentRunSpec spec;
    try {
        const auto doc = ordered_json::parse(text);
        spec.manifest = doc.at("manifest").get<std::string>();
        spec.mode = parse_experiment_mode(doc.at("mode").get<std::string>());
        spec.n_kb = doc.at("n_kb").get<std::size_t>();
        spec.kb_scale = doc.at("kb_scale").get<double>();
        spec.seed = doc.at("seed").get<std::uint64_t>();
        spec.extractor = parse_extractor_kind(doc.at("extractor").get<std::string>());
        spec.prompt = parse_prompt_kind(doc.at("prompt").get<std::string>());
        spec.embed_mode = parse_embed_mode(doc.at("embed_mode").get<std::string>());
        const auto& enc = doc.at("encoder");
        spec.encoder.provider = enc.at("provider").get<std::string>() == "external" ? EncoderProvider::External
                                                                                     : EncoderProvider::HashedNgram;
        spec.encoder.dimension = enc.at("dimension").get<std::size_t>();
        spec.encoder.ngram_min = enc.at("ngram_min").get<std::size_t>();
        spec.encoder.ngram_max = enc.at("ngram_max").get<std::size_t>();
        spec.encoder.endpoint = enc.at("endpoint").get<std::string>();
        spec.encoder.model = enc.at("model").get<std::string>();
        const auto& gen = doc.at("generation");
        spec.generation.temperature = gen.at("temperature").get<double>();
        spec.generation.max_output_tokens = gen.at("max_output_tokens").get<std::size_t>();
        spec.generation.model = gen.at("model").get<std::string>();
        spec.generation.base_url = gen.at("base_url").get<std::string>();
        spec.generation.request_timeout = std::chrono::milliseconds(gen.at("request_timeout_ms").get<std::int64_t>());
        spec.generation.retry.max_retries = gen.at("max_retries").get<std::size_t>();
        spec.generation.max_in_flight = gen.at("max_in_flight").get<std::size_t>();
        if (!doc.at("char_budget").is_null()) spec.char_budget = doc.at("char_budget").get<std::size_t>();
        if (!doc.at("limit").is_null()) spec.limit = doc.at("limit").get<std::size_t>();
    } catch (const ordered_json::exception& e) {
        throw Error(ErrorCode::Parse, std::string("malformed run spec: ") + e.what());
    }
    return spec;
}

namespace {

std::string format_triplets(const std::vector<Triplet>& triplets) {
    std::string out;
    for (const auto& t : triplets) {
        out += triplet_to_string(t);
        out += '\n';
    }
    return out;
}

std::size_t resolve_budget(const ExperimentRunSpec& spec) {
    if (spec.char_budget) return *spec.char_budget;
    if (auto model = find_model(spec.generation.model)) return char_budget_for_context_window(model->context_window);
    return kDefaultCharBudget;
}

bool needs_context(ExperimentMode mode) {
    return mode == ExperimentMode::Triplets || mode == ExperimentMode::Examples;
}

NodeKind index_kind_for(ExperimentMode mode) {
    return mode == ExperimentMode::Examples ? NodeKind::Example : NodeKind::Triplet;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentRunSpec& spec, const ExperimentInputs& inputs) {
    spec.generation.validate();
    if (spec.n_kb == 0) throw Error(ErrorCode::InvalidArgument, "N_KB must be >= 1");

    std::optional<Dataset> owned_dataset;
    const Dataset* dataset = inputs.dataset;
    if (dataset == nullptr) {
        owned_dataset = load_dataset(spec.manifest);
        dataset = &*owned_dataset;
    }
    std::vector<AnnotatedSentence> test = dataset->test;
    if (spec.limit && *spec.limit < test.size()) test.resize(*spec.limit);
    const std::size_t max_triplets = std::max<std::size_t>(1, dataset->max_triplets);

    std::unique_ptr<Encoder> owned_encoder;
    const Encoder* encoder = inputs.encoder;
    std::optional<KnowledgeBase> owned_kb;
    std::optional<VectorIndex> owned_index;
    const VectorIndex* index = nullptr;

    if (needs_context(spec.mode)) {
        if (encoder == nullptr) {
            owned_encoder = make_encoder(spec.encoder);
            encoder = owned_encoder.get();
        }
        const KnowledgeBase* kb = inputs.kb;
        if (kb == nullptr) {
            owned_kb = build_kb(dataset->train, dataset->validation);
            if (spec.kb_scale < 1.0) owned_kb = downscale_kb(*owned_kb, spec.kb_scale, spec.seed);
            kb = &*owned_kb;
        }
        const NodeKind kind = index_kind_for(spec.mode);
        if (inputs.index != nullptr) {
            if (inputs.index->kind() != kind) throw Error(ErrorCode::InvalidArgument, "supplied index has the wrong kind");
            index = inputs.index;
        } else if (!kb->empty()) {
            owned_index = build_index(*kb, kind, spec.embed_mode, *encoder);
            index = &*owned_index;
        }
    }

    const ContextMode context_mode =
        spec.mode == ExperimentMode::Examples ? ContextMode::Examples : ContextMode::Triplets;
    std::vector<RetrievedContext> contexts;
    if (index != nullptr) {
        contexts = retrieve_all(test, *index, *encoder, spec.n_kb);
    } else {
        contexts.assign(test.size(), RetrievedContext::empty_of(context_mode, spec.n_kb));
    }

    std::unique_ptr<ChatClient> client;
    if (spec.extractor == ExtractorKind::RemoteLlm) {
        auto transport = inputs.transport ? inputs.transport
                                          : std::make_shared<HttplibTransport>(spec.generation.request_timeout);
        client = std::make_unique<ChatClient>(spec.generation, transport, "seed-" + std::to_string(spec.seed));
    }

    const auto& tmpl = find_template(spec.prompt, shot_mode_for(spec.mode));
    const std::size_t budget = resolve_budget(spec);

    ExperimentResult result;
    result.prompts.resize(test.size());
    result.raw_outputs.resize(test.size());
    result.malformed_lines.resize(test.size());
    result.errors.resize(test.size());
    std::vector<SentenceRecord> records(test.size());
    std::exception_ptr fatal;

    const auto n = static_cast<std::ptrdiff_t>(test.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t ii = 0; ii < n; ++ii) {
        const auto i = static_cast<std::size_t>(ii);
        const auto& sentence = test[i];
        auto& record = records[i];
        record.id = i;
        record.gold = sentence.gold;
        try {
            const RetrievedContext* context = &contexts[i];
            result.prompts[i] = render(tmpl, sentence.text, max_triplets, context, budget);
            std::string raw;
            switch (spec.extractor) {
                case ExtractorKind::RemoteLlm:
                    try {
                        raw = client->generate(result.prompts[i]);
                    } catch (const Error& e) {
                        if (e.code() != ErrorCode::Transport && e.code() != ErrorCode::Api &&
                            e.code() != ErrorCode::Parse) {
                            throw;
                        }
                        record.failed = true;
                        result.errors[i] = std::string(to_string(e.code())) + ": " + e.what();
                    }
                    break;
                case ExtractorKind::RandomBaseline: {
                    auto rng = sentence_rng(spec.seed, i);
                    raw = format_triplets(random_extract(*context, max_triplets, rng));
                    break;
                }
                default: raw = format_triplets(oracle_extract(spec.extractor, sentence, context, max_triplets));
            }
            const auto parsed = parse_triplets(raw, max_triplets);
            record.predicted = parsed.triplets;
            record.tp = count_matches(record.predicted, record.gold);
            result.raw_outputs[i] = std::move(raw);
            result.malformed_lines[i] = parsed.malformed_lines;
        } catch (...) {
#pragma omp critical(kgte_experiment_failure)
            if (!fatal) fatal = std::current_exception();
        }
    }
    if (fatal) std::rethrow_exception(fatal);

    result.report = aggregate(std::move(records));
    return result;
}

void write_experiment_artifacts(const ExperimentRunSpec& spec, const ExperimentResult& result,
                                const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    auto open = [&](const char* name) {
        std::ofstream out(out_dir / name);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + (out_dir / name).string());
        return out;
    };
    open("report.json") << dump_report(result.report, 2) << '\n';
    open("spec.json") << spec.to_json() << '\n';
    auto log = open("sentences.jsonl");
    for (std::size_t i = 0; i < result.prompts.size(); ++i) {
        const auto& prompt = result.prompts[i];
        ordered_json line = {{"id", i},
                             {"prompt", prompt.rendered},
                             {"context_items_included", prompt.context_items_included},
                             {"truncated", prompt.truncated},
                             {"raw_output", result.raw_outputs[i]},
                             {"malformed_lines", result.malformed_lines[i]},
                             {"error", result.errors[i]}};
        log << line.dump() << '\n';
    }
}

FitResult fit_ablation(const std::vector<AblationPoint>& points) {
    std::vector<Point> xy;
    xy.reserve(points.size());
    for (const auto& p : points) xy.push_back({p.p, p.f1});
    return linear_fit(xy);
}

AblationResult run_ablation(const ExperimentRunSpec& spec, const std::vector<double>& scales,
                            const ExperimentInputs& inputs) {
    if (!needs_context(spec.mode)) {
        throw Error(ErrorCode::InvalidArgument, "ablation needs mode triplets or examples");
    }
    std::optional<Dataset> owned_dataset;
    const Dataset* dataset = inputs.dataset;
    if (dataset == nullptr) {
        owned_dataset = load_dataset(spec.manifest);
        dataset = &*owned_dataset;
    }
    std::unique_ptr<Encoder> owned_encoder;
    const Encoder* encoder = inputs.encoder;
    if (encoder == nullptr) {
        owned_encoder = make_encoder(spec.encoder);
        encoder = owned_encoder.get();
    }
    const KnowledgeBase full = inputs.kb ? *inputs.kb : build_kb(dataset->train, dataset->validation);

    std::vector<AnnotatedSentence> test = dataset->test;
    if (spec.limit && *spec.limit < test.size()) test.resize(*spec.limit);

    AblationResult result;
    for (const double scale : scales) {
        const KnowledgeBase kb = downscale_kb(full, scale, spec.seed);
        std::optional<VectorIndex> index;
        double p = 0.0;
        if (!kb.empty()) {
            index = build_index(kb, index_kind_for(spec.mode), spec.embed_mode, *encoder);
            p = sweep_context_quality(test, *index, *encoder, {spec.n_kb}, scale).points.front().p;
        }
        ExperimentRunSpec run = spec;
        run.kb_scale = scale;
        ExperimentInputs run_inputs = inputs;
        run_inputs.dataset = dataset;
        run_inputs.kb = &kb;
        run_inputs.index = index ? &*index : nullptr;
        run_inputs.encoder = encoder;
        const auto outcome = run_experiment(run, run_inputs);
        result.points.push_back({scale, p, outcome.report.f1});
    }
    result.fit = fit_ablation(result.points);
    return result;
}

}  // namespace kgte
