#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "optree/plan.hpp"

namespace optree {

// ---------------------------------------------------------------------------
// Generator vocabulary
// ---------------------------------------------------------------------------

struct CuisineInfo {
    std::string name;                     // "Italian"
    std::vector<std::string> keywords;    // lowercase tokens naming the cuisine in event text
    std::vector<std::string> restaurants; // each contains at least one keyword
};

struct ArtistInfo {
    std::string name;
    std::vector<std::string> tracks;
};

struct CategoryInfo {
    std::string name; // "books"
    std::vector<std::string> products;
    int min_cents = 0;
    int max_cents = 0;
};

struct AnchorInfo {
    std::string summary; // calendar entry text, e.g. "Relocation to Berlin"
    std::string phrase;  // how questions refer to it, e.g. "my relocation to Berlin"
};

/// Closed-world vocabulary shared by the generator, the question templates
/// and the oracle. Tokens of different slot values are pairwise disjoint so
/// lexical retrieval cannot confuse them.
struct Vocabulary {
    std::vector<CuisineInfo> cuisines;
    std::vector<ArtistInfo> artists;
    std::vector<std::string> workout_types; // lowercase
    std::vector<std::string> series;
    std::vector<std::string> movies;
    std::vector<CategoryInfo> categories;
    std::vector<AnchorInfo> anchors;
    std::vector<std::string> calendar_fillers;
    std::vector<std::string> post_fillers;
    std::vector<std::string> mail_fillers;

    const CuisineInfo* cuisine(std::string_view name) const;
    const ArtistInfo* artist(std::string_view name) const;
    const CategoryInfo* category(std::string_view name) const;
    const AnchorInfo* anchor_by_phrase(std::string_view phrase) const;
};

const Vocabulary& vocabulary();

/// Expansion lines (`phrase TAB tokens`) and gazetteer lines
/// (`key TAB pattern TAB value`) derived from the vocabulary.
std::string vocabulary_expansions();
std::string vocabulary_gazetteer();

// ---------------------------------------------------------------------------
// Question templates
// ---------------------------------------------------------------------------

using Slots = std::map<std::string, std::string, std::less<>>;

struct QuestionTemplate {
    std::string id;
    /// Surface form with `{slot}` markers.
    std::string pattern;
    OperatorTree (*build)(const Slots& slots);
};

std::span<const QuestionTemplate> template_catalog();
const QuestionTemplate* find_template(std::string_view id);

std::string render_question(const QuestionTemplate& tmpl, const Slots& slots);

struct TemplateMatch {
    const QuestionTemplate* tmpl = nullptr;
    Slots slots;
};

/// Case-insensitive match against every catalog pattern; the first template
/// whose pattern matches the whole question wins.
std::optional<TemplateMatch> match_question(std::string_view question);

/// "April 2024" <-> "2024-04".
std::optional<std::string> month_slot_key(std::string_view text);
std::string month_slot_text(std::string_view key);

/// The "after" condition used by the temporal-join templates.
Expr after_same_day_predicate();

} // namespace optree
