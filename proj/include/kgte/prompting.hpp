#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "kgte/retriever.hpp"

namespace kgte {

inline constexpr std::string_view kPromptCatalogVersion = "kgte-prompts/1";

enum class PromptKind { Base, ChainOfThought, Documented };
enum class ShotMode { Zero, StaticTwoShot, ContextTriplets, Examples };

std::string to_string(PromptKind kind);
std::string to_string(ShotMode mode);
PromptKind parse_prompt_kind(std::string_view s);  // base | cot | documented (or full names)
ShotMode parse_shot_mode(std::string_view s);      // zero | static2 | triplets | examples

/// Placeholders: {text}, {max_triplets}, and {context_triplets} or
/// {examples} depending on the shot mode. The block placeholders expand to
/// a complete section (header included) or to nothing when the context is
/// empty, so an empty-context render equals the zero-shot render.
struct PromptTemplate {
    PromptKind kind = PromptKind::Base;
    ShotMode shot_mode = ShotMode::Zero;
    std::string body;
    std::string version{kPromptCatalogVersion};

    /// Throws Error{InvalidArgument} when the placeholder rules are broken.
    void validate() const;
    std::string name() const;
};

/// All 3 kinds x 4 shot modes.
const std::vector<PromptTemplate>& catalog();
const PromptTemplate& find_template(PromptKind kind, ShotMode mode);

/// The two fixed demonstrations embedded in static two-shot prompts.
const std::vector<AnnotatedSentence>& static_examples();

struct PromptInstance {
    std::string rendered;
    PromptKind kind = PromptKind::Base;
    ShotMode shot_mode = ShotMode::Zero;
    std::size_t context_items_available = 0;
    std::size_t context_items_included = 0;
    bool truncated = false;
};

/// 4 characters per token.
inline constexpr std::size_t kCharsPerToken = 4;
inline constexpr std::size_t kDefaultCharBudget = 2048 * kCharsPerToken;

std::size_t char_budget_for_context_window(std::size_t context_tokens);

/// Substitute placeholders. Context items are the rank-ordered triplets
/// (ContextTriplets) or examples (Examples); other modes ignore `context`.
/// When the render exceeds `char_budget`, lowest-ranked items are dropped
/// until it fits. Throws Error{BudgetExceeded} if even the zero-context
/// render does not fit.
PromptInstance render(const PromptTemplate& tmpl, std::string_view sentence,
                      std::size_t max_triplets, const RetrievedContext* context,
                      std::size_t char_budget = kDefaultCharBudget);

/// Write one `<name>.txt` per catalog template plus an INDEX listing.
void export_catalog(const std::filesystem::path& dir);

}  // namespace kgte
