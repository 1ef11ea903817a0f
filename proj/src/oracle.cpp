#include "optree/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

namespace optree {

namespace {

const std::string& need(const Slots& slots, std::string_view name) {
    auto it = slots.find(name);
    if (it == slots.end()) {
        throw Error("missing template slot '" + std::string(name) + "'");
    }
    return it->second;
}

bool same_text(std::string_view a, std::string_view b) {
    return ascii_lower(a) == ascii_lower(b);
}

std::string field_str(const Event& e, std::string_view key) {
    auto it = e.fields.find(key);
    if (it == e.fields.end() || it->second.kind() != Value::Kind::Str) {
        return {};
    }
    return it->second.as_str();
}

Date day_of(const Event& e) {
    return date_of(e.scope.start);
}

std::vector<const Event*> of_kind(const EventStore& store, SourceKind kind) {
    std::vector<const Event*> out;
    for (const auto& e : store.events()) {
        if (e.source == kind) {
            out.push_back(&e);
        }
    }
    return out;
}

std::vector<const Event*> workouts(const EventStore& store, const std::string* type = nullptr) {
    auto all = of_kind(store, SourceKind::Workout);
    if (type) {
        std::erase_if(all, [&](const Event* e) { return !same_text(field_str(*e, "workout_type"), *type); });
    }
    return all;
}

/// One scope per real-world meal: events mentioning the cuisine, merged
/// when events of different kinds overlap in time; the highest-priority
/// member supplies the scope.
std::vector<TemporalScope> meals(const EventStore& store, const std::string& cuisine_name) {
    const auto* cuisine = vocabulary().cuisine(cuisine_name);
    if (!cuisine) {
        throw TemplateUnsatisfiable("unknown cuisine '" + cuisine_name + "'");
    }
    std::vector<const Event*> hits;
    for (const auto& e : store.events()) {
        std::string text = ascii_lower(field_str(e, "summary") + " " + e.text.value_or(""));
        auto tokens = tokenize(text);
        bool hit = false;
        for (const auto& k : cuisine->keywords) {
            hit = hit || std::find(tokens.begin(), tokens.end(), k) != tokens.end();
        }
        if (hit) {
            hits.push_back(&e);
        }
    }
    std::vector<std::size_t> parent(hits.size());
    std::iota(parent.begin(), parent.end(), 0);
    auto root = [&](std::size_t i) {
        while (parent[i] != i) {
            i = parent[i];
        }
        return i;
    };
    for (std::size_t i = 0; i < hits.size(); ++i) {
        for (std::size_t j = i + 1; j < hits.size(); ++j) {
            if (hits[i]->source != hits[j]->source && temporal_overlap(hits[i]->scope, hits[j]->scope)) {
                parent[root(j)] = root(i);
            }
        }
    }
    std::map<std::size_t, const Event*> best;
    for (std::size_t i = 0; i < hits.size(); ++i) {
        auto& slot = best[root(i)];
        if (!slot || dedup_priority(hits[i]->source) < dedup_priority(slot->source)) {
            slot = hits[i];
        }
    }
    std::vector<TemporalScope> out;
    for (const auto& [_, e] : best) {
        out.push_back(e->scope);
    }
    return out;
}

Answer count_meals_after(const std::vector<TemporalScope>& meal_scopes, const std::vector<const Event*>& sessions) {
    std::int64_t n = 0;
    for (const auto& m : meal_scopes) {
        for (const auto* w : sessions) {
            if (date_of(m.start) == day_of(*w) && m.start > w->scope.end) {
                ++n;
            }
        }
    }
    return Answer::of(Value(n));
}

Answer most_frequent(const std::map<std::string, std::int64_t>& counts, const std::string& what) {
    if (counts.empty()) {
        throw TemplateUnsatisfiable("no " + what);
    }
    auto best = counts.begin();
    bool tie = false;
    for (auto it = std::next(counts.begin()); it != counts.end(); ++it) {
        if (it->second > best->second) {
            best = it;
            tie = false;
        } else if (it->second == best->second) {
            tie = true;
        }
    }
    if (tie) {
        throw TemplateUnsatisfiable("tied maximum for " + what);
    }
    return Answer::of(Value(best->first));
}

std::int64_t year_of(Date d) {
    return civil(d).year;
}

std::int64_t parse_year(const std::string& s) {
    if (s.size() != 4 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        throw TemplateUnsatisfiable("bad year '" + s + "'");
    }
    return std::stoll(s);
}

} // namespace

Answer oracle_answer(const EventStore& store, std::string_view template_id, const Slots& slots, Date reference_date) {
    if (!find_template(template_id)) {
        throw UnknownTemplate("unknown template '" + std::string(template_id) + "'");
    }
    const auto& v = vocabulary();

    if (template_id == "count_after_workout") {
        return count_meals_after(meals(store, need(slots, "cuisine")), workouts(store));
    }
    if (template_id == "count_after_typed_workout") {
        return count_meals_after(meals(store, need(slots, "cuisine")), workouts(store, &need(slots, "workout_type")));
    }
    if (template_id == "count_workout_type") {
        return Answer::of(Value(static_cast<std::int64_t>(workouts(store, &need(slots, "workout_type")).size())));
    }
    if (template_id == "count_workout_type_this_year") {
        std::int64_t n = 0;
        for (const auto* w : workouts(store, &need(slots, "workout_type"))) {
            n += year_of(day_of(*w)) == year_of(reference_date);
        }
        return Answer::of(Value(n));
    }
    if (template_id == "superlative_month_artist" || template_id == "superlative_month_series") {
        const bool music = template_id == "superlative_month_artist";
        const auto& wanted = need(slots, music ? "artist" : "series");
        std::map<std::string, std::int64_t> per_month;
        for (const auto* e : of_kind(store, music ? SourceKind::MusicStream : SourceKind::TvSeriesStream)) {
            if (same_text(field_str(*e, music ? "artist" : "series"), wanted)) {
                ++per_month[month_key(day_of(*e))];
            }
        }
        return most_frequent(per_month, "streams of " + wanted);
    }
    if (template_id == "count_since_anchor") {
        const auto* anchor = v.anchor_by_phrase(need(slots, "anchor"));
        if (!anchor) {
            throw TemplateUnsatisfiable("unknown anchor '" + need(slots, "anchor") + "'");
        }
        std::vector<const Event*> marks;
        for (const auto* e : of_kind(store, SourceKind::CalendarEntry)) {
            if (same_text(field_str(*e, "summary"), anchor->summary)) {
                marks.push_back(e);
            }
        }
        if (marks.size() != 1) {
            throw TemplateUnsatisfiable("anchor '" + anchor->summary + "' must occur exactly once");
        }
        const auto things = ascii_lower(need(slots, "things"));
        std::vector<const Event*> pool = things == "workouts" ? workouts(store)
                                         : things == "movies" ? of_kind(store, SourceKind::MovieStream)
                                                              : of_kind(store, SourceKind::TvSeriesStream);
        std::int64_t n = 0;
        for (const auto* e : pool) {
            n += day_of(*e) >= day_of(*marks.front());
        }
        return Answer::of(Value(n));
    }
    if (template_id == "count_artist_month") {
        const auto& artist = need(slots, "artist");
        auto key = month_slot_key(need(slots, "month"));
        if (!key) {
            throw TemplateUnsatisfiable("bad month '" + need(slots, "month") + "'");
        }
        std::int64_t n = 0;
        for (const auto* e : of_kind(store, SourceKind::MusicStream)) {
            n += same_text(field_str(*e, "artist"), artist) && month_key(day_of(*e)) == *key;
        }
        return Answer::of(Value(n));
    }
    if (template_id == "sum_spent_year") {
        const auto& category = need(slots, "category");
        const auto year = parse_year(need(slots, "year"));
        std::int64_t cents = 0;
        std::size_t n = 0;
        for (const auto* e : of_kind(store, SourceKind::Purchase)) {
            auto price = e->fields.find("price");
            if (same_text(field_str(*e, "category"), category) && year_of(day_of(*e)) == year &&
                price != e->fields.end() && price->second.is_numeric()) {
                cents += std::llround(price->second.to_double() * 100.0);
                ++n;
            }
        }
        if (n == 0) {
            throw TemplateUnsatisfiable("no " + category + " purchases in " + need(slots, "year"));
        }
        return Answer::of(Value(static_cast<double>(cents) / 100.0));
    }
    if (template_id == "avg_workout_duration" || template_id == "max_workout_duration") {
        const auto sessions = workouts(store, &need(slots, "workout_type"));
        if (sessions.empty()) {
            throw TemplateUnsatisfiable("no " + need(slots, "workout_type") + " workouts");
        }
        std::int64_t total = 0;
        std::int64_t longest = 0;
        for (const auto* w : sessions) {
            const auto minutes = w->fields.at("duration_min").as_int();
            total += minutes;
            longest = std::max(longest, minutes);
        }
        if (template_id == "max_workout_duration") {
            return Answer::of(Value(longest));
        }
        return Answer::of(Value(static_cast<double>(total) / static_cast<double>(sessions.size())));
    }
    if (template_id == "count_distinct_artists_year") {
        const auto year = parse_year(need(slots, "year"));
        std::set<std::string> artists;
        for (const auto* e : of_kind(store, SourceKind::MusicStream)) {
            if (year_of(day_of(*e)) == year) {
                artists.insert(ascii_lower(field_str(*e, "artist")));
            }
        }
        return Answer::of(Value(static_cast<std::int64_t>(artists.size())));
    }
    if (template_id == "superlative_weekday_workout") {
        std::map<std::string, std::int64_t> per_day;
        for (const auto* w : workouts(store)) {
            ++per_day[weekday_name(day_of(*w))];
        }
        return most_frequent(per_day, "workouts");
    }
    throw UnknownTemplate("no oracle for template '" + std::string(template_id) + "'");
}

// ---------------------------------------------------------------------------
// Question sampling
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> slot_names(const QuestionTemplate& t) {
    std::vector<std::string> out;
    std::string_view p = t.pattern;
    for (auto open = p.find('{'); open != std::string_view::npos; open = p.find('{', open + 1)) {
        out.emplace_back(p.substr(open + 1, p.find('}', open) - open - 1));
    }
    return out;
}

template <typename T>
const T& draw(const std::vector<T>& items, std::mt19937_64& rng) {
    if (items.empty()) {
        throw TemplateUnsatisfiable("no candidates for slot");
    }
    return items[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(items.size()) - 1))];
}

std::string fill_slot(const std::string& name, const PersonaProfile& profile, std::mt19937_64& rng) {
    auto pref = [&](const char* key) -> const std::vector<std::string>& {
        static const std::vector<std::string> none;
        auto it = profile.preferences.find(key);
        return it == profile.preferences.end() ? none : it->second;
    };
    if (name == "cuisine") return draw(pref("cuisines"), rng);
    if (name == "workout_type") return draw(pref("workout_types"), rng);
    if (name == "artist") return draw(pref("artists"), rng);
    if (name == "series") return draw(pref("series"), rng);
    if (name == "category") return draw(pref("categories"), rng);
    if (name == "things") {
        static const std::vector<std::string> things = {"workouts", "movies", "TV episodes"};
        return draw(things, rng);
    }
    if (name == "anchor") {
        std::vector<std::string> phrases;
        for (const auto& a : vocabulary().anchors) {
            phrases.push_back(a.phrase);
        }
        return draw(phrases, rng);
    }
    const int first_year = civil(profile.first).year;
    const int last_year = civil(profile.last).year;
    if (name == "year") {
        return std::to_string(uniform_int(rng, first_year, last_year));
    }
    if (name == "month") {
        const Date day{static_cast<std::int32_t>(uniform_int(rng, profile.first.days, profile.last.days))};
        return month_slot_text(month_key(day));
    }
    throw UnknownTemplate("no sampler for slot '" + name + "'");
}

} // namespace

std::vector<GoldCase> generate_questions(const EventStore& store, const PersonaProfile& profile, std::uint64_t seed,
                                         std::size_t n) {
    std::mt19937_64 rng(seed);
    const auto catalog = template_catalog();
    std::vector<GoldCase> out;
    std::set<std::string> seen;
    std::size_t budget = 200 + 50 * n;
    while (out.size() < n) {
        if (budget-- == 0) {
            throw Error("could not draw " + std::to_string(n) + " distinct answerable questions");
        }
        const auto& tmpl = catalog[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(catalog.size()) - 1))];
        Slots slots;
        GoldCase c;
        try {
            for (const auto& name : slot_names(tmpl)) {
                slots[name] = fill_slot(name, profile, rng);
            }
            c.question = render_question(tmpl, slots);
            if (seen.contains(ascii_lower(c.question))) {
                continue;
            }
            c.answer = oracle_answer(store, tmpl.id, slots);
        } catch (const TemplateUnsatisfiable&) {
            continue;
        }
        seen.insert(ascii_lower(c.question));
        char id[16];
        std::snprintf(id, sizeof id, "q%03zu", out.size() + 1);
        c.id = id;
        c.template_id = tmpl.id;
        c.plan = tmpl.build(slots);
        c.slots = std::move(slots);
        out.push_back(std::move(c));
    }
    return out;
}

std::string gold_display(const Answer& answer) {
    if (answer.kind != Answer::Kind::scalar) {
        return "no answer";
    }
    return render(answer.scalar);
}

Json to_json(const GoldCase& c) {
    Json slots = Json::object();
    for (const auto& [k, v] : c.slots) {
        slots[k] = v;
    }
    return Json{{"id", c.id},
                {"question", c.question},
                {"template", c.template_id},
                {"slots", std::move(slots)},
                {"plan", serialize_plan(c.plan)},
                {"answer", gold_display(c.answer)},
                {"value", c.answer.kind == Answer::Kind::scalar ? to_json(c.answer.scalar) : Json()}};
}

GoldCase gold_case_from_json(const Json& j, std::size_t line) {
    auto fail = [&](const std::string& msg) {
        return ParseError(line, msg);
    };
    if (!j.is_object()) {
        throw fail("expected an object");
    }
    auto str = [&](const char* key) {
        auto it = j.find(key);
        if (it == j.end() || !it->is_string()) {
            throw fail(std::string("missing string '") + key + "'");
        }
        return it->get<std::string>();
    };
    GoldCase c;
    c.id = str("id");
    c.question = str("question");
    c.template_id = j.contains("template") ? str("template") : std::string();
    if (auto it = j.find("slots"); it != j.end() && it->is_object()) {
        for (const auto& [k, v] : it->items()) {
            if (!v.is_string()) {
                throw fail("slot '" + k + "' must be a string");
            }
            c.slots[k] = v.get<std::string>();
        }
    }
    if (auto it = j.find("plan"); it != j.end() && it->is_string()) {
        try {
            c.plan = parse_plan(it->get<std::string>());
        } catch (const ParseError& e) {
            throw fail("plan: " + e.reason());
        }
    }
    auto value = j.find("value");
    if (value != j.end() && !value->is_null()) {
        try {
            c.answer = Answer::of(field_value_from_json(*value));
        } catch (const Error& e) {
            throw fail(std::string("value: ") + e.what());
        }
    } else {
        const auto display = str("answer");
        c.answer = display == "no answer" ? Answer::none() : Answer::of(Value(display));
    }
    return c;
}

void write_gold_cases(std::ostream& out, const std::vector<GoldCase>& cases) {
    for (const auto& c : cases) {
        out << to_json(c).dump() << '\n';
    }
}

std::vector<GoldCase> load_gold_cases(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    std::vector<GoldCase> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string::npos) {
            end = text.size();
        }
        ++line_no;
        std::string_view line(text.data() + pos, end - pos);
        pos = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        Json j;
        try {
            j = Json::parse(line);
        } catch (const Json::parse_error& e) {
            throw ParseError(line_no, e.what());
        }
        out.push_back(gold_case_from_json(j, line_no));
    }
    return out;
}

} // namespace optree
