#include "kgte/prompting.hpp"

#include <array>
#include <fstream>

#include "kgte/encoder.hpp"
#include "kgte/error.hpp"

namespace kgte {

namespace {

constexpr std::string_view kText = "{text}";
constexpr std::string_view kMaxTriplets = "{max_triplets}";
constexpr std::string_view kContextTriplets = "{context_triplets}";
constexpr std::string_view kExamples = "{examples}";

constexpr std::string_view kBaseIntro =
    "Some text is provided below. Extract up to {max_triplets} knowledge triplets from it.\n"
    "Each triplet has the form (subject, predicate, object). Write one triplet per line and "
    "nothing else.\n\n";

constexpr std::string_view kCotIntro =
    "Some text is provided below. Extract up to {max_triplets} knowledge triplets from it.\n"
    "Each triplet has the form (subject, predicate, object). Reason step by step:\n"
    "Step 1: list the entities mentioned in the text.\n"
    "Step 2: for each pair of entities, decide which relation, if any, the text states between them.\n"
    "Step 3: check that every subject and object appears in the text.\n"
    "After the steps, write the line \"Triplets:\" followed by the final triplets, one per line.\n\n";

constexpr std::string_view kDocumentedIntro =
    "Some text is provided below. Extract up to {max_triplets} knowledge triplets from it.\n"
    "Definitions:\n"
    "- A subject is the entity a fact is about.\n"
    "- An object is the entity or value the fact links the subject to.\n"
    "- A predicate is the relation type connecting the subject to the object.\n"
    "- A triplet (subject, predicate, object) is one fact stated in the text.\n"
    "Write one triplet per line in the form (subject, predicate, object) and nothing else.\n\n";

constexpr std::string_view kQuery = "Sentence: {text}\nTriplets:\n";

std::size_t occurrences(std::string_view haystack, std::string_view needle) {
    std::size_t count = 0;
    for (auto pos = haystack.find(needle); pos != std::string_view::npos;
         pos = haystack.find(needle, pos + needle.size())) {
        ++count;
    }
    return count;
}

std::string examples_block(const std::vector<const AnnotatedSentence*>& examples) {
    if (examples.empty()) return {};
    std::string out = "Examples:\n\n";
    for (const auto* e : examples) {
        out += "Sentence: ";
        out += e->text;
        out += "\nTriplets:\n";
        for (const auto& t : e->gold) {
            out += triplet_to_string(t);
            out += '\n';
        }
        out += '\n';
    }
    return out;
}

std::string context_triplets_block(const std::vector<ScoredTriplet>& items, std::size_t count) {
    if (count == 0) return {};
    std::string out = "Context Triplets:\n";
    for (std::size_t i = 0; i < count; ++i) {
        out += triplet_to_string(items[i].triplet);
        out += '\n';
    }
    out += '\n';
    return out;
}

// Single pass; substituted values are never rescanned.
std::string substitute(std::string_view body, std::string_view text, std::string_view max_triplets,
                       std::string_view block) {
    std::string out;
    out.reserve(body.size() + text.size() + block.size());
    std::size_t i = 0;
    while (i < body.size()) {
        if (body[i] == '{') {
            const auto rest = body.substr(i);
            if (rest.starts_with(kText)) {
                out += text;
                i += kText.size();
                continue;
            }
            if (rest.starts_with(kMaxTriplets)) {
                out += max_triplets;
                i += kMaxTriplets.size();
                continue;
            }
            if (rest.starts_with(kContextTriplets)) {
                out += block;
                i += kContextTriplets.size();
                continue;
            }
            if (rest.starts_with(kExamples)) {
                out += block;
                i += kExamples.size();
                continue;
            }
        }
        out += body[i++];
    }
    return out;
}

std::string_view intro_for(PromptKind kind) {
    switch (kind) {
        case PromptKind::Base: return kBaseIntro;
        case PromptKind::ChainOfThought: return kCotIntro;
        case PromptKind::Documented: return kDocumentedIntro;
    }
    return kBaseIntro;
}

PromptTemplate make_template(PromptKind kind, ShotMode mode) {
    PromptTemplate t;
    t.kind = kind;
    t.shot_mode = mode;
    t.body = intro_for(kind);
    switch (mode) {
        case ShotMode::Zero: break;
        case ShotMode::StaticTwoShot: {
            std::vector<const AnnotatedSentence*> fixed;
            for (const auto& e : static_examples()) fixed.push_back(&e);
            t.body += examples_block(fixed);
            break;
        }
        case ShotMode::ContextTriplets: t.body += kContextTriplets; break;
        case ShotMode::Examples: t.body += kExamples; break;
    }
    t.body += kQuery;
    t.validate();
    return t;
}

}  // namespace

std::string to_string(PromptKind kind) {
    switch (kind) {
        case PromptKind::Base: return "base";
        case PromptKind::ChainOfThought: return "chain_of_thought";
        case PromptKind::Documented: return "documented";
    }
    return "base";
}

std::string to_string(ShotMode mode) {
    switch (mode) {
        case ShotMode::Zero: return "zero";
        case ShotMode::StaticTwoShot: return "static_two_shot";
        case ShotMode::ContextTriplets: return "context_triplets";
        case ShotMode::Examples: return "examples";
    }
    return "zero";
}

PromptKind parse_prompt_kind(std::string_view s) {
    if (s == "base") return PromptKind::Base;
    if (s == "cot" || s == "chain_of_thought") return PromptKind::ChainOfThought;
    if (s == "documented") return PromptKind::Documented;
    throw Error(ErrorCode::InvalidArgument, "unknown prompt kind: " + std::string(s));
}

ShotMode parse_shot_mode(std::string_view s) {
    if (s == "zero") return ShotMode::Zero;
    if (s == "static2" || s == "static_two_shot") return ShotMode::StaticTwoShot;
    if (s == "triplets" || s == "context_triplets") return ShotMode::ContextTriplets;
    if (s == "examples") return ShotMode::Examples;
    throw Error(ErrorCode::InvalidArgument, "unknown shot mode: " + std::string(s));
}

void PromptTemplate::validate() const {
    auto fail = [&](const std::string& why) {
        throw Error(ErrorCode::InvalidArgument, "template " + name() + ": " + why);
    };
    if (occurrences(body, kText) != 1) fail("{text} must occur exactly once");
    if (occurrences(body, kMaxTriplets) != 1) fail("{max_triplets} must occur exactly once");
    const auto ctx = occurrences(body, kContextTriplets);
    const auto ex = occurrences(body, kExamples);
    if (ctx != (shot_mode == ShotMode::ContextTriplets ? 1u : 0u)) {
        fail("{context_triplets} must occur exactly in context_triplets mode");
    }
    if (ex != (shot_mode == ShotMode::Examples ? 1u : 0u)) fail("{examples} must occur exactly in examples mode");
}

std::string PromptTemplate::name() const { return to_string(kind) + "_" + to_string(shot_mode); }

const std::vector<AnnotatedSentence>& static_examples() {
    static const std::vector<AnnotatedSentence> examples = {
        {"The Acharya Institute of Technology is located in Bangalore and was established in 2000.",
         {Triplet::make("Acharya_Institute_of_Technology", "city", "Bangalore"),
          Triplet::make("Acharya_Institute_of_Technology", "established", "2000")}},
        {"Aarhus Airport serves the city of Aarhus, which is in Denmark.",
         {Triplet::make("Aarhus_Airport", "cityServed", "Aarhus"),
          Triplet::make("Aarhus", "country", "Denmark")}},
    };
    return examples;
}

const std::vector<PromptTemplate>& catalog() {
    static const std::vector<PromptTemplate> templates = [] {
        std::vector<PromptTemplate> out;
        for (auto kind : {PromptKind::Base, PromptKind::ChainOfThought, PromptKind::Documented}) {
            for (auto mode : {ShotMode::Zero, ShotMode::StaticTwoShot, ShotMode::ContextTriplets,
                              ShotMode::Examples}) {
                out.push_back(make_template(kind, mode));
            }
        }
        return out;
    }();
    return templates;
}

const PromptTemplate& find_template(PromptKind kind, ShotMode mode) {
    for (const auto& t : catalog()) {
        if (t.kind == kind && t.shot_mode == mode) return t;
    }
    throw Error(ErrorCode::InvalidArgument, "no template for " + to_string(kind) + "/" + to_string(mode));
}

std::size_t char_budget_for_context_window(std::size_t context_tokens) {
    return context_tokens * kCharsPerToken;
}

PromptInstance render(const PromptTemplate& tmpl, std::string_view sentence, std::size_t max_triplets,
                      const RetrievedContext* context, std::size_t char_budget) {
    tmpl.validate();
    if (max_triplets == 0) throw Error(ErrorCode::InvalidArgument, "max_triplets must be >= 1");
    const std::string max_str = std::to_string(max_triplets);

    std::size_t available = 0;
    if (context != nullptr) {
        if (tmpl.shot_mode == ShotMode::ContextTriplets) {
            if (context->mode != ContextMode::Triplets) {
                throw Error(ErrorCode::InvalidArgument, "context_triplets prompt needs a triplet context");
            }
            available = context->triplets.size();
        } else if (tmpl.shot_mode == ShotMode::Examples) {
            if (context->mode != ContextMode::Examples) {
                throw Error(ErrorCode::InvalidArgument, "examples prompt needs an example context");
            }
            available = context->examples.size();
        }
    }

    auto block_for = [&](std::size_t count) -> std::string {
        if (tmpl.shot_mode == ShotMode::ContextTriplets) return context_triplets_block(context->triplets, count);
        if (tmpl.shot_mode == ShotMode::Examples) {
            std::vector<const AnnotatedSentence*> chosen;
            for (std::size_t i = 0; i < count; ++i) chosen.push_back(&context->examples[i].example);
            return examples_block(chosen);
        }
        return {};
    };

    for (std::size_t included = available;; --included) {
        std::string rendered = substitute(tmpl.body, sentence, max_str, block_for(included));
        if (rendered.size() <= char_budget) {
            PromptInstance instance;
            instance.rendered = std::move(rendered);
            instance.kind = tmpl.kind;
            instance.shot_mode = tmpl.shot_mode;
            instance.context_items_available = available;
            instance.context_items_included = included;
            instance.truncated = included < available;
            return instance;
        }
        if (included == 0) {
            throw Error(ErrorCode::BudgetExceeded,
                        "prompt needs " + std::to_string(rendered.size()) + " characters without context, budget is " +
                            std::to_string(char_budget));
        }
    }
}

void export_catalog(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    std::ofstream index(dir / "INDEX");
    if (!index) throw Error(ErrorCode::Io, "cannot write " + (dir / "INDEX").string());
    index << kPromptCatalogVersion << '\n';
    for (const auto& t : catalog()) {
        const auto file = dir / (t.name() + ".txt");
        std::ofstream out(file);
        if (!out) throw Error(ErrorCode::Io, "cannot write " + file.string());
        out << t.body;
        index << t.name() << ".txt\t" << to_string(t.kind) << '\t' << to_string(t.shot_mode) << '\n';
    }
}

}  // namespace kgte
