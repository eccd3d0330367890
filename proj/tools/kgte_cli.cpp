// kgte: command-line front end for the KB-augmented triplet extraction
// pipeline. Every command writes JSON or CSV; failures print a JSON error
// record on stderr and exit non-zero.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "kgte/analysis.hpp"
#include "kgte/corpus.hpp"
#include "kgte/encoder.hpp"
#include "kgte/error.hpp"
#include "kgte/evaluation.hpp"
#include "kgte/experiment.hpp"
#include "kgte/prompting.hpp"
#include "kgte/retriever.hpp"
#include "kgte/vector_index.hpp"

using nlohmann::ordered_json;

namespace {

struct EncoderOptions {
    std::string provider = "hashed";
    std::size_t dimension = 384;
    std::size_t ngram_min = 3;
    std::size_t ngram_max = 5;
    std::string url;
    std::string model;

    void attach(CLI::App* cmd) {
        cmd->add_option("--encoder", provider, "hashed | external")->check(CLI::IsMember({"hashed", "external"}));
        cmd->add_option("--dim", dimension, "Embedding dimension");
        cmd->add_option("--ngram-min", ngram_min, "Smallest character n-gram (hashed encoder)");
        cmd->add_option("--ngram-max", ngram_max, "Largest character n-gram (hashed encoder)");
        cmd->add_option("--encoder-url", url, "Embeddings endpoint (external encoder)");
        cmd->add_option("--encoder-model", model, "Embedding model id (external encoder)");
    }

    kgte::EncoderConfig config() const {
        kgte::EncoderConfig c;
        c.provider = provider == "external" ? kgte::EncoderProvider::External : kgte::EncoderProvider::HashedNgram;
        c.dimension = dimension;
        c.ngram_min = ngram_min;
        c.ngram_max = ngram_max;
        c.endpoint = url;
        c.model = model;
        return c;
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << '\n';
        return;
    }
    std::ofstream out(path);
    if (!out) throw kgte::Error(kgte::ErrorCode::Io, "cannot write " + path);
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
}

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw kgte::Error(kgte::ErrorCode::Io, "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

ordered_json triplet_json(const kgte::Triplet& t) { return {t.subject, t.predicate, t.object}; }

ordered_json context_json(const std::string& sentence, const kgte::RetrievedContext& c) {
    ordered_json items = ordered_json::array();
    if (c.mode == kgte::ContextMode::Triplets) {
        for (const auto& t : c.triplets) {
            items.push_back({{"node", t.node_id}, {"score", t.score}, {"triplet", triplet_json(t.triplet)}});
        }
    } else {
        for (const auto& e : c.examples) {
            ordered_json gold = ordered_json::array();
            for (const auto& t : e.example.gold) gold.push_back(triplet_json(t));
            items.push_back({{"node", e.node_id}, {"score", e.score}, {"text", e.example.text}, {"triplets", gold}});
        }
    }
    return {{"sentence", sentence},
            {"mode", c.mode == kgte::ContextMode::Triplets ? "triplets" : "examples"},
            {"n_kb_requested", c.n_kb_requested},
            {"n_returned", c.size()},
            {"items", std::move(items)}};
}

ordered_json fit_json(const kgte::FitResult& fit) {
    return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2}, {"n_points", fit.n_points}};
}

kgte::KnowledgeBase kb_for(const kgte::Dataset& dataset, double scale, std::uint64_t seed) {
    auto kb = kgte::build_kb(dataset.train, dataset.validation);
    return scale < 1.0 ? kgte::downscale_kb(kb, scale, seed) : kb;
}

int emit_error(std::string_view code, const std::string& message) {
    ordered_json record = {{"error", {{"code", code}, {"message", message}}}};
    std::cerr << record.dump() << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Knowledge-base augmented triplet extraction toolkit"};
    app.require_subcommand(1);

    // ingest
    std::string manifest;
    std::string format = "manifest";
    std::string out;
    auto* ingest = app.add_subcommand("ingest", "Load a dataset and print its statistics");
    ingest->add_option("--manifest", manifest, "Manifest (or JSONL file with --format jsonl)")->required();
    ingest->add_option("--format", format, "manifest | jsonl")->check(CLI::IsMember({"manifest", "jsonl"}));
    ingest->add_option("--out", out, "Output JSON path (stdout when omitted)");

    // index
    std::string kind = "triplet";
    std::string embed_mode = "sentence";
    double scale = 1.0;
    std::uint64_t seed = 0;
    EncoderOptions enc;
    auto* index_cmd = app.add_subcommand("index", "Build a vector index from the train+validation KB");
    index_cmd->add_option("--manifest", manifest)->required();
    index_cmd->add_option("--kind", kind, "triplet | example")->check(CLI::IsMember({"triplet", "example"}));
    index_cmd->add_option("--embed-mode", embed_mode, "sentence | sentence+triplets")
        ->check(CLI::IsMember({"sentence", "sentence+triplets"}));
    index_cmd->add_option("--scale", scale, "KB scale S in [0,1]")->check(CLI::Range(0.0, 1.0));
    index_cmd->add_option("--seed", seed);
    index_cmd->add_option("--out", out)->required();
    enc.attach(index_cmd);

    // retrieve
    std::string index_path;
    std::size_t nkb = kgte::kDefaultNkb;
    std::string mode;
    std::string sentence;
    std::string input;
    auto* retrieve = app.add_subcommand("retrieve", "Retrieve KB context for sentences");
    retrieve->add_option("--index", index_path)->required();
    retrieve->add_option("--nkb", nkb)->check(CLI::PositiveNumber);
    retrieve->add_option("--mode", mode, "triplets | examples (defaults to the index kind)")
        ->check(CLI::IsMember({"triplets", "examples"}));
    auto* sentence_opt = retrieve->add_option("--sentence", sentence);
    retrieve->add_option("--input", input, "JSONL split; retrieves for every record")->excludes(sentence_opt);
    retrieve->add_option("--out", out);
    enc.attach(retrieve);

    // extract
    std::string prompt = "base";
    std::string extractor = "oracle-gold";
    std::string llm_url;
    std::string model = "llama-65b";
    std::string replay;
    std::size_t limit = 0;
    std::size_t budget = 0;
    double temperature = kgte::kDefaultTemperature;
    std::string extract_mode = "zero";
    auto* extract = app.add_subcommand("extract", "Run retrieve -> prompt -> extract -> parse -> score");
    extract->add_option("--manifest", manifest);
    extract->add_option("--mode", extract_mode, "zero | static2 | triplets | examples")
        ->check(CLI::IsMember({"zero", "static2", "triplets", "examples"}));
    extract->add_option("--prompt", prompt, "base | cot | documented")
        ->check(CLI::IsMember({"base", "cot", "documented"}));
    extract->add_option("--nkb", nkb)->check(CLI::PositiveNumber);
    extract->add_option("--scale", scale)->check(CLI::Range(0.0, 1.0));
    extract->add_option("--seed", seed);
    extract->add_option("--extractor", extractor, "llm | oracle-gold | oracle-prefix | random")
        ->check(CLI::IsMember({"llm", "oracle-gold", "oracle-prefix", "random"}));
    extract->add_option("--embed-mode", embed_mode)->check(CLI::IsMember({"sentence", "sentence+triplets"}));
    extract->add_option("--llm-url", llm_url, "Base URL of a chat-completions endpoint");
    extract->add_option("--model", model);
    extract->add_option("--temperature", temperature)->check(CLI::NonNegativeNumber);
    extract->add_option("--limit", limit, "Only the first N test sentences");
    extract->add_option("--budget", budget, "Prompt character budget");
    extract->add_option("--replay", replay, "Re-run a stored spec.json");
    extract->add_option("--out", out, "Output directory")->required();
    enc.attach(extract);

    // eval
    std::string pred;
    std::string gold;
    auto* eval = app.add_subcommand("eval", "Micro-F1 of predictions against gold");
    eval->add_option("--pred", pred, "JSONL of predicted triplet lists")->required();
    eval->add_option("--gold", gold, "JSONL of gold triplet lists (dataset split format)")->required();
    eval->add_option("--out", out);

    // sweep-p
    std::string nkb_list = "1,2,3,4,5,6,7,8,9,10";
    auto* sweep = app.add_subcommand("sweep-p", "P(N_KB) context-quality curve on the test split");
    sweep->add_option("--manifest", manifest)->required();
    sweep->add_option("--index", index_path, "Prebuilt index (built from the manifest otherwise)");
    sweep->add_option("--kind", kind)->check(CLI::IsMember({"triplet", "example"}));
    sweep->add_option("--embed-mode", embed_mode)->check(CLI::IsMember({"sentence", "sentence+triplets"}));
    sweep->add_option("--nkb-list", nkb_list);
    sweep->add_option("--scale", scale)->check(CLI::Range(0.0, 1.0));
    sweep->add_option("--seed", seed);
    sweep->add_option("--limit", limit);
    sweep->add_option("--out", out);
    enc.attach(sweep);

    // ablate
    std::string scales = "0,0.1,0.25,0.5,1";
    std::string ablate_mode = "triplets";
    auto* ablate = app.add_subcommand("ablate", "KB downscaling ablation with a linear F1 ~ P_S fit");
    ablate->add_option("--manifest", manifest)->required();
    ablate->add_option("--scales", scales);
    ablate->add_option("--seed", seed);
    ablate->add_option("--mode", ablate_mode)->check(CLI::IsMember({"triplets", "examples"}));
    ablate->add_option("--nkb", nkb)->check(CLI::PositiveNumber);
    ablate->add_option("--prompt", prompt)->check(CLI::IsMember({"base", "cot", "documented"}));
    ablate->add_option("--extractor", extractor)
        ->check(CLI::IsMember({"llm", "oracle-gold", "oracle-prefix", "random"}));
    ablate->add_option("--llm-url", llm_url);
    ablate->add_option("--model", model);
    ablate->add_option("--limit", limit);
    ablate->add_option("--out", out, "Output directory")->required();
    enc.attach(ablate);

    // fit
    bool log_x = false;
    auto* fit = app.add_subcommand("fit", "OLS fit of y on x (or on ln x) from a CSV");
    fit->add_option("--input", input, "CSV with x,y columns")->required();
    fit->add_flag("--log-x", log_x, "Fit y against ln(x)");
    fit->add_option("--out", out);

    // random-study
    std::size_t trials = 1000;
    auto* study = app.add_subcommand("random-study", "Random-model F1 against N_KB with closed-form comparison");
    study->add_option("--manifest", manifest)->required();
    study->add_option("--nkb-list", nkb_list);
    study->add_option("--seed", seed);
    study->add_option("--trials", trials)->check(CLI::PositiveNumber);
    study->add_option("--limit", limit);
    study->add_option("--out", out);
    enc.attach(study);

    // prompts
    auto* prompts = app.add_subcommand("prompts", "Export the prompt catalog as plain text files");
    prompts->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return emit_error("usage", e.what());
    }

    auto parse_sizes = [](const std::string& s) {
        std::vector<std::size_t> v;
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stoul(item));
        return v;
    };
    auto parse_doubles = [](const std::string& s) {
        std::vector<double> v;
        std::stringstream ss(s);
        for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
        return v;
    };
    auto limit_split = [&](std::vector<kgte::AnnotatedSentence> split) {
        if (limit > 0 && limit < split.size()) split.resize(limit);
        return split;
    };

    try {
        if (*ingest) {
            const auto dataset = kgte::load_dataset(
                manifest, format == "jsonl" ? kgte::DatasetFormat::SingleFile : kgte::DatasetFormat::Manifest);
            const auto stats = dataset.stats();
            ordered_json doc = {{"train", stats.train},           {"validation", stats.validation},
                                {"test", stats.test},             {"relations", stats.relations},
                                {"max_triplets", stats.max_triplets}, {"avg_triplets", stats.avg_triplets}};
            write_text(out, doc.dump(2));
        } else if (*index_cmd) {
            const auto dataset = kgte::load_dataset(manifest);
            const auto encoder = kgte::make_encoder(enc.config());
            const auto index = kgte::build_index(kb_for(dataset, scale, seed), kgte::parse_node_kind(kind),
                                                 kgte::parse_embed_mode(embed_mode), *encoder);
            kgte::save_index(index, out);
            std::cout << ordered_json{{"nodes", index.size()}, {"kind", kind}, {"out", out}}.dump() << '\n';
        } else if (*retrieve) {
            const auto encoder = kgte::make_encoder(enc.config());
            const auto index = kgte::load_index(index_path, encoder->fingerprint());
            const bool want_examples = mode.empty() ? index.kind() == kgte::NodeKind::Example : mode == "examples";
            std::vector<std::string> sentences;
            if (!input.empty()) {
                for (const auto& s : kgte::load_split(input)) sentences.push_back(s.text);
            } else if (!sentence.empty()) {
                sentences.push_back(sentence);
            } else {
                throw kgte::Error(kgte::ErrorCode::InvalidArgument, "retrieve needs --sentence or --input");
            }
            ordered_json results = ordered_json::array();
            for (const auto& s : sentences) {
                const auto ctx = want_examples ? kgte::retrieve_examples(s, index, *encoder, nkb)
                                               : kgte::retrieve_triplets(s, index, *encoder, nkb);
                results.push_back(context_json(s, ctx));
            }
            write_text(out, results.dump(2));
        } else if (*extract) {
            kgte::ExperimentRunSpec spec;
            if (!replay.empty()) {
                spec = kgte::ExperimentRunSpec::from_json(read_text(replay));
            } else {
                if (manifest.empty()) throw kgte::Error(kgte::ErrorCode::InvalidArgument, "extract needs --manifest");
                spec.manifest = manifest;
                spec.mode = kgte::parse_experiment_mode(extract_mode);
                spec.n_kb = nkb;
                spec.kb_scale = scale;
                spec.seed = seed;
                spec.extractor = kgte::parse_extractor_kind(extractor);
                spec.prompt = kgte::parse_prompt_kind(prompt);
                spec.embed_mode = kgte::parse_embed_mode(embed_mode);
                spec.encoder = enc.config();
                spec.generation.base_url = llm_url;
                spec.generation.model = model;
                spec.generation.temperature = temperature;
                if (budget > 0) spec.char_budget = budget;
                if (limit > 0) spec.limit = limit;
            }
            const auto result = kgte::run_experiment(spec);
            kgte::write_experiment_artifacts(spec, result, out);
            std::cout << ordered_json{{"f1", result.report.f1},
                                      {"precision", result.report.precision},
                                      {"recall", result.report.recall},
                                      {"failed_sentences", result.report.failed_sentences},
                                      {"out", out}}
                             .dump()
                      << '\n';
        } else if (*eval) {
            const auto predictions = kgte::load_triplet_lists(pred);
            const auto gold_lists = kgte::load_triplet_lists(gold);
            write_text(out, kgte::dump_report(kgte::micro_f1(predictions, gold_lists), 2));
        } else if (*sweep) {
            const auto dataset = kgte::load_dataset(manifest);
            const auto encoder = kgte::make_encoder(enc.config());
            std::optional<kgte::VectorIndex> index;
            if (!index_path.empty()) {
                index = kgte::load_index(index_path, encoder->fingerprint());
            } else {
                index = kgte::build_index(kb_for(dataset, scale, seed), kgte::parse_node_kind(kind),
                                          kgte::parse_embed_mode(embed_mode), *encoder);
            }
            const auto curve = kgte::sweep_context_quality(limit_split(dataset.test), *index, *encoder,
                                                           parse_sizes(nkb_list), scale);
            write_text(out, curve.to_csv());
        } else if (*ablate) {
            kgte::ExperimentRunSpec spec;
            spec.manifest = manifest;
            spec.mode = kgte::parse_experiment_mode(ablate_mode);
            spec.n_kb = nkb;
            spec.seed = seed;
            spec.extractor = kgte::parse_extractor_kind(extractor);
            spec.prompt = kgte::parse_prompt_kind(prompt);
            spec.encoder = enc.config();
            spec.generation.base_url = llm_url;
            spec.generation.model = model;
            if (limit > 0) spec.limit = limit;
            const auto result = kgte::run_ablation(spec, parse_doubles(scales));

            std::filesystem::create_directories(out);
            std::ostringstream csv;
            csv.precision(17);
            csv << "scale,p,f1\n";
            for (const auto& p : result.points) csv << p.scale << ',' << p.p << ',' << p.f1 << '\n';
            write_text((std::filesystem::path(out) / "points.csv").string(), csv.str());
            write_text((std::filesystem::path(out) / "fit.json").string(), fit_json(result.fit).dump(2));
            write_text((std::filesystem::path(out) / "spec.json").string(), spec.to_json());
            std::cout << fit_json(result.fit).dump() << '\n';
        } else if (*fit) {
            const auto points = kgte::read_points_csv(input);
            const auto result = log_x ? kgte::log_param_fit(points) : kgte::linear_fit(points);
            write_text(out, fit_json(result).dump(2));
        } else if (*study) {
            const auto dataset = kgte::load_dataset(manifest);
            const auto encoder = kgte::make_encoder(enc.config());
            const auto index = kgte::build_index(kb_for(dataset, 1.0, seed), kgte::NodeKind::Triplet,
                                                 kgte::ExampleEmbedMode::SentenceOnly, *encoder);
            kgte::RandomStudyConfig config;
            config.n_kb_values = parse_sizes(nkb_list);
            config.max_triplets = dataset.max_triplets;
            config.seed = seed;
            config.trials = trials;
            const auto rows = kgte::random_model_study(limit_split(dataset.test), index, *encoder, config);
            write_text(out, kgte::random_study_to_csv(rows));
        } else if (*prompts) {
            kgte::export_catalog(out);
        }
    } catch (const kgte::Error& e) {
        return emit_error(kgte::to_string(e.code()), e.what());
    } catch (const std::exception& e) {
        emit_error("internal", e.what());
        return 2;
    }
    return 0;
}
