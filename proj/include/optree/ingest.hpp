#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "optree/catalog.hpp"
#include "optree/engine.hpp"
#include "optree/event.hpp"
#include "optree/json_io.hpp"

namespace optree {

/// Portable bounded integer in [lo, hi]; std distributions differ across
/// standard libraries, this does not.
std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi);

struct PersonaProfile {
    std::string name = "persona";
    /// Categories: artists, cuisines, workout_types, series, categories.
    /// Earlier entries are drawn more often.
    std::map<std::string, std::vector<std::string>> preferences;
    Date first = make_date(2023, 1, 1);
    Date last = make_date(2024, 11, 25);
    std::map<SourceKind, int> counts;
    double duplicate_fraction = 0.3;

    /// Throws ConfigError on negative counts, an empty date range, a
    /// fraction outside [0, 1] or preferences outside the vocabulary.
    void validate() const;
};

/// The profile used for the bundled generated persona and the end-to-end check.
PersonaProfile default_profile(std::string name = "alex");

struct PlantedDuplicate {
    std::string base_id;
    std::string duplicate_id;
};

struct GeneratedPersona {
    PersonaProfile profile;
    std::vector<Event> events; // generation order
    std::vector<PlantedDuplicate> planted;
    std::string expansions; // expansion table lines for the persona's vocabulary
    std::string gazetteer;  // gazetteer lines for the persona's vocabulary
};

/// Deterministic for (profile, seed).
GeneratedPersona generate_persona(const PersonaProfile& profile, std::uint64_t seed);

/// Writes events.jsonl, planted.tsv, expansion.tsv and gazetteer.tsv.
void write_generated(const GeneratedPersona& persona, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Questions and gold answers
// ---------------------------------------------------------------------------

class UnknownTemplate : public Error {
public:
    using Error::Error;
};

class TemplateUnsatisfiable : public Error {
public:
    using Error::Error;
};

struct GoldCase {
    std::string id;
    std::string question;
    std::string template_id;
    Slots slots;
    OperatorTree plan;
    Answer answer;
};

/// Brute-force reference answer computed from raw events with straight
/// loops; shares no code with retrieval or the engine. Throws
/// UnknownTemplate, or TemplateUnsatisfiable when the answer is empty or a
/// superlative is tied.
Answer oracle_answer(const EventStore& store, std::string_view template_id, const Slots& slots,
                     Date reference_date = make_date(2024, 11, 25));

/// Draws n satisfiable cases; throws Error when the retry budget runs out.
std::vector<GoldCase> generate_questions(const EventStore& store, const PersonaProfile& profile, std::uint64_t seed,
                                         std::size_t n);

/// Normalized gold answer: the display string the engine would render.
std::string gold_display(const Answer& answer);

Json to_json(const GoldCase& c);
GoldCase gold_case_from_json(const Json& j, std::size_t line);
void write_gold_cases(std::ostream& out, const std::vector<GoldCase>& cases);
std::vector<GoldCase> load_gold_cases(const std::filesystem::path& path);

} // namespace optree
