#include "kgte/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "kgte/error.hpp"

namespace kgte {

using nlohmann::json;

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::MalformedRecord: return "malformed_record";
        case ErrorCode::EmptySplit: return "empty_split";
        case ErrorCode::Io: return "io";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::VersionMismatch: return "version_mismatch";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::BudgetExceeded: return "budget_exceeded";
        case ErrorCode::Transport: return "transport";
        case ErrorCode::Api: return "api";
        case ErrorCode::Misaligned: return "misaligned";
    }
    return "unknown";
}

namespace {

bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

char ascii_lower(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

}  // namespace

std::string normalize_surface(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    bool pending_space = false;
    for (char c : raw) {
        if (c == '_') c = ' ';
        if (is_space(c)) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out.push_back(' ');
            pending_space = false;
        }
        out.push_back(ascii_lower(c));
    }
    return out;
}

Triplet Triplet::make(std::string_view subject, std::string_view predicate,
                      std::string_view object) {
    Triplet t{normalize_surface(subject), normalize_surface(predicate), normalize_surface(object)};
    if (t.subject.empty() || t.predicate.empty() || t.object.empty()) {
        throw Error(ErrorCode::InvalidArgument, "triplet field is empty after normalization");
    }
    return t;
}

std::size_t TripletHash::operator()(const Triplet& t) const noexcept {
    std::hash<std::string> h;
    std::size_t seed = h(t.subject);
    seed ^= h(t.predicate) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    seed ^= h(t.object) + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2);
    return seed;
}

std::vector<Triplet> dedup_triplets(const std::vector<Triplet>& triplets) {
    std::unordered_set<Triplet> seen;
    std::vector<Triplet> out;
    out.reserve(triplets.size());
    for (const auto& t : triplets) {
        if (seen.insert(t).second) out.push_back(t);
    }
    return out;
}

DatasetStats Dataset::stats() const {
    return DatasetStats{train.size(), validation.size(), test.size(), relation_vocab.size(),
                        max_triplets, avg_triplets};
}

void compute_dataset_fields(Dataset& dataset) {
    std::set<std::string> vocab;
    std::size_t max_triplets = 0;
    std::size_t total_triplets = 0;
    std::size_t total_sentences = 0;
    for (const auto* split : {&dataset.train, &dataset.validation, &dataset.test}) {
        for (const auto& s : *split) {
            for (const auto& t : s.gold) vocab.insert(t.predicate);
            max_triplets = std::max(max_triplets, s.gold.size());
            total_triplets += s.gold.size();
            ++total_sentences;
        }
    }
    dataset.relation_vocab.assign(vocab.begin(), vocab.end());
    dataset.max_triplets = max_triplets;
    dataset.avg_triplets = total_sentences == 0
                               ? 0.0
                               : static_cast<double>(total_triplets) /
                                     static_cast<double>(total_sentences);
}

namespace {

AnnotatedSentence parse_record(const std::string& line, const std::string& path, std::size_t lineno) {
    json record;
    try {
        record = json::parse(line);
    } catch (const json::parse_error& e) {
        throw RecordError(path, lineno, e.what());
    }
    if (!record.is_object()) throw RecordError(path, lineno, "record is not a JSON object");
    auto text = record.find("text");
    if (text == record.end() || !text->is_string()) {
        throw RecordError(path, lineno, "missing string field \"text\"");
    }
    auto triplets = record.find("triplets");
    if (triplets == record.end() || !triplets->is_array()) {
        throw RecordError(path, lineno, "missing array field \"triplets\"");
    }

    AnnotatedSentence sentence;
    sentence.text = text->get<std::string>();
    if (normalize_surface(sentence.text).empty()) throw RecordError(path, lineno, "empty text");

    std::vector<Triplet> gold;
    for (const auto& item : *triplets) {
        if (!item.is_array() || item.size() != 3 || !item[0].is_string() || !item[1].is_string() ||
            !item[2].is_string()) {
            throw RecordError(path, lineno, "triplet must be an array of three strings");
        }
        try {
            gold.push_back(Triplet::make(item[0].get<std::string>(), item[1].get<std::string>(),
                                         item[2].get<std::string>()));
        } catch (const Error& e) {
            throw RecordError(path, lineno, e.what());
        }
    }
    if (gold.empty()) throw RecordError(path, lineno, "record has no triplets");
    sentence.gold = dedup_triplets(gold);
    return sentence;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& entry) {
    std::filesystem::path p(entry);
    return p.is_absolute() ? p : base / p;
}

}  // namespace

std::vector<AnnotatedSentence> load_split(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<AnnotatedSentence> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); })) continue;
        out.push_back(parse_record(line, path.string(), lineno));
    }
    if (out.empty()) throw Error(ErrorCode::EmptySplit, "split has no records: " + path.string());
    return out;
}

std::vector<std::vector<Triplet>> load_triplet_lists(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<std::vector<Triplet>> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::all_of(line.begin(), line.end(), [](char c) { return is_space(c); })) continue;
        try {
            const auto doc = json::parse(line);
            const json& list = doc.is_object() ? doc.at("triplets") : doc;
            if (!list.is_array()) throw RecordError(path.string(), lineno, "expected an array of triplets");
            std::vector<Triplet> triplets;
            for (const auto& item : list) {
                if (!item.is_array() || item.size() != 3) {
                    throw RecordError(path.string(), lineno, "triplet must be an array of three strings");
                }
                triplets.push_back(Triplet::make(item[0].get<std::string>(), item[1].get<std::string>(),
                                                 item[2].get<std::string>()));
            }
            out.push_back(std::move(triplets));
        } catch (const json::exception& e) {
            throw RecordError(path.string(), lineno, e.what());
        } catch (const RecordError&) {
            throw;
        } catch (const Error& e) {
            throw RecordError(path.string(), lineno, e.what());
        }
    }
    return out;
}

void save_split(const std::filesystem::path& path, const std::vector<AnnotatedSentence>& sentences) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
    for (const auto& s : sentences) {
        json triplets = json::array();
        for (const auto& t : s.gold) triplets.push_back({t.subject, t.predicate, t.object});
        json record = {{"text", s.text}, {"triplets", std::move(triplets)}};
        out << record.dump() << '\n';
    }
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
    Dataset dataset;
    if (format == DatasetFormat::SingleFile) {
        dataset.test = load_split(path);
    } else {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::Io, "cannot open manifest " + path.string());
        json manifest;
        try {
            manifest = json::parse(in);
        } catch (const json::parse_error& e) {
            throw Error(ErrorCode::Parse, "manifest " + path.string() + ": " + e.what());
        }
        const auto base = path.parent_path();
        auto entry = [&](const char* key) {
            if (!manifest.contains(key) || !manifest[key].is_string()) {
                throw Error(ErrorCode::Parse,
                            "manifest " + path.string() + " lacks string field \"" + key + "\"");
            }
            return resolve(base, manifest[key].get<std::string>());
        };
        dataset.train = load_split(entry("train"));
        dataset.validation = load_split(entry("validation"));
        dataset.test = load_split(entry("test"));
    }
    compute_dataset_fields(dataset);
    return dataset;
}

std::filesystem::path save_dataset(const std::filesystem::path& dir, const Dataset& dataset) {
    std::filesystem::create_directories(dir);
    save_split(dir / "train.jsonl", dataset.train);
    save_split(dir / "valid.jsonl", dataset.validation);
    save_split(dir / "test.jsonl", dataset.test);
    const auto manifest_path = dir / "manifest.json";
    std::ofstream out(manifest_path);
    if (!out) throw Error(ErrorCode::Io, "cannot write " + manifest_path.string());
    out << json{{"train", "train.jsonl"}, {"validation", "valid.jsonl"}, {"test", "test.jsonl"}}.dump(2)
        << '\n';
    return manifest_path;
}

namespace {

std::vector<Triplet> union_of_gold(const std::vector<AnnotatedSentence>& examples) {
    std::vector<Triplet> all;
    for (const auto& e : examples) all.insert(all.end(), e.gold.begin(), e.gold.end());
    return dedup_triplets(all);
}

}  // namespace

KnowledgeBase build_kb(const std::vector<AnnotatedSentence>& train,
                       const std::vector<AnnotatedSentence>& validation) {
    if (train.empty() && validation.empty()) {
        throw Error(ErrorCode::EmptyInput, "cannot build a knowledge base from empty splits");
    }
    KnowledgeBase kb;
    kb.examples.reserve(train.size() + validation.size());
    kb.examples.insert(kb.examples.end(), train.begin(), train.end());
    kb.examples.insert(kb.examples.end(), validation.begin(), validation.end());
    kb.triplets = union_of_gold(kb.examples);
    kb.source_scale = 1.0;
    return kb;
}

KnowledgeBase downscale_kb(const KnowledgeBase& kb, double scale, std::uint64_t seed) {
    if (!(scale >= 0.0 && scale <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "scale must lie in [0, 1]");
    }
    const std::size_t n = kb.examples.size();
    // Guard against 0.29 * 100 = 28.999...
    const auto keep = std::min(n, static_cast<std::size_t>(std::floor(scale * static_cast<double>(n) + 1e-9)));

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    order.resize(keep);
    std::sort(order.begin(), order.end());

    KnowledgeBase out;
    out.examples.reserve(keep);
    for (auto i : order) out.examples.push_back(kb.examples[i]);
    out.triplets = union_of_gold(out.examples);
    out.source_scale = scale;
    return out;
}

}  // namespace kgte
