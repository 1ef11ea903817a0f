#include "optree/catalog.hpp"

#include <array>
#include <regex>

#include "optree/error.hpp"

namespace optree {

namespace {

Vocabulary make_vocabulary() {
    Vocabulary v;
    v.cuisines = {
        {"Italian", {"italian", "trattoria", "pizzeria", "pizza"}, {"Trattoria Roma", "Pizzeria Napoli", "Trattoria Venezia"}},
        {"Mexican", {"mexican", "taqueria", "cantina"}, {"Taqueria El Sol", "Cantina Azul"}},
        {"Japanese", {"japanese", "sushi", "ramen"}, {"Sushi Bar Kyoto", "Ramen Ichiban"}},
        {"Indian", {"indian", "curry", "tandoori"}, {"Curry House Delhi", "Tandoori Palace"}},
        {"Thai", {"thai"}, {"Thai Orchid", "Thai Basil Kitchen"}},
    };
    v.artists = {
        {"Taylor Swift", {"Lover", "Cruel Summer", "Anti-Hero", "Shake It Off"}},
        {"Miles Davis", {"So What", "Blue in Green", "Freddie Freeloader"}},
        {"Norah Jones", {"Come Away With Me", "Sunrise", "Dont Know Why"}},
        {"Billie Eilish", {"Ocean Eyes", "Lovely", "Happier Than Ever"}},
        {"Hans Zimmer", {"Time", "Cornfield Chase", "Interstellar Main Theme"}},
        {"Ella Fitzgerald", {"Summertime", "Dream a Little Dream", "Cheek to Cheek"}},
    };
    v.workout_types = {"yoga", "running", "cycling", "swimming", "pilates", "boxing", "rowing"};
    v.series = {"The Crown", "Breaking Bad", "Stranger Things", "Severance", "Succession"};
    v.movies = {"Inception", "Arrival", "Amelie", "Parasite", "Casablanca",
                "Vertigo",   "Heat",    "Whiplash", "Moonlight", "Gravity"};
    v.categories = {
        {"books", {"Dune paperback", "Cosmos hardcover", "Poetry anthology", "Field guide to birds"}, 800, 4000},
        {"electronics", {"Wireless earbuds", "USB charger", "Mechanical keyboard", "Portable speaker"}, 1500, 30000},
        {"clothing", {"Wool sweater", "Rain jacket", "Linen shirt", "Hiking boots"}, 2000, 15000},
    };
    v.anchors = {
        {"Thesis kickoff", "my thesis kickoff"},
        {"First day at the new job", "my first day at the new job"},
        {"Relocation to Berlin", "my relocation to Berlin"},
        {"Adopted our dog Bella", "we adopted our dog Bella"},
    };
    v.calendar_fillers = {"Dentist appointment", "Team meeting",  "Call with mom", "Haircut",
                          "Parent teacher conference", "Car inspection", "Budget review", "Piano lesson"};
    v.post_fillers = {"Beautiful sunset over the lake", "Coffee with an old friend", "Finally finished the puzzle",
                      "Rainy afternoon at home", "Planted tomatoes in the garden", "Visited the science museum"};
    v.mail_fillers = {"Your monthly statement is available", "Weekly newsletter from the library",
                      "Reminder: dentist appointment tomorrow", "Invitation to the neighborhood meeting",
                      "Your password was changed"};
    return v;
}

template <typename T>
const T* find_by_name(const std::vector<T>& items, std::string_view name) {
    for (const auto& item : items) {
        if (ascii_lower(item.name) == ascii_lower(name)) {
            return &item;
        }
    }
    return nullptr;
}

} // namespace

const CuisineInfo* Vocabulary::cuisine(std::string_view name) const { return find_by_name(cuisines, name); }
const ArtistInfo* Vocabulary::artist(std::string_view name) const { return find_by_name(artists, name); }
const CategoryInfo* Vocabulary::category(std::string_view name) const { return find_by_name(categories, name); }

const AnchorInfo* Vocabulary::anchor_by_phrase(std::string_view phrase) const {
    for (const auto& a : anchors) {
        if (ascii_lower(a.phrase) == ascii_lower(phrase)) {
            return &a;
        }
    }
    return nullptr;
}

const Vocabulary& vocabulary() {
    static const Vocabulary v = make_vocabulary();
    return v;
}

std::string vocabulary_expansions() {
    std::string out =
        "workout\tworkout,session,training\n"
        "workouts\tworkout,session,training\n"
        "work out\tworkout,session,training\n"
        "movies\tmovie\n"
        "episodes\tepisode\n"
        "music streams\tmusic\n";
    for (const auto& c : vocabulary().cuisines) {
        std::string tokens;
        for (const auto& k : c.keywords) {
            tokens += (tokens.empty() ? "" : ",") + k;
        }
        out += ascii_lower(c.name) + " food\t" + tokens + "\n";
    }
    return out;
}

std::string vocabulary_gazetteer() {
    std::string out;
    for (const auto& c : vocabulary().cuisines) {
        for (const auto& k : c.keywords) {
            out += "cuisine\t" + k + "\t" + ascii_lower(c.name) + "\n";
        }
    }
    for (const auto& w : vocabulary().workout_types) {
        out += "workout_type\t" + w + "\t" + w + "\n";
    }
    for (const char* meal : {"lunch", "dinner", "breakfast"}) {
        out += std::string("meal\t") + meal + "\t" + meal + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plan skeletons
// ---------------------------------------------------------------------------

namespace {

OperatorNode annotate(OperatorNode node, std::string sub_question) {
    node.sub_question = std::move(sub_question);
    return node;
}

OperatorNode retrieve(const std::string& query) {
    return make_retrieve(query, query);
}

Expr contains_type(const std::string& type) {
    return Expr::call("contains", {Expr::attr("workout_type"), Expr::literal(Value(ascii_lower(type)))});
}

Expr this_year() {
    return Expr::call("eq", {Expr::attr("year"), Expr::call("year", {Expr::ref_date()})});
}

Expr year_is(const std::string& year) {
    return Expr::call("eq", {Expr::attr("year"), Expr::literal(Value(std::int64_t{std::stoi(year)}))});
}

const std::string& slot(const Slots& slots, std::string_view name) {
    auto it = slots.find(name);
    if (it == slots.end()) {
        throw Error("missing template slot '" + std::string(name) + "'");
    }
    return it->second;
}

std::string meal_query(const Slots& s) {
    return "instances of eating " + slot(s, "cuisine") + " food";
}

OperatorNode meal_branch(const Slots& s) {
    return annotate(make_extract(retrieve(meal_query(s)), {"date", "start_time"}),
                    meal_query(s) + " with date and start time");
}

OperatorNode workout_branch() {
    return annotate(make_extract(retrieve("workout events"), {"date", "end_time"}),
                    "workout events with date and end time");
}

OperatorNode typed_workouts(const std::string& type, std::vector<std::string> keys, const std::string& what) {
    keys.push_back("workout_type");
    return annotate(make_filter(annotate(make_extract(retrieve("workout events"), std::move(keys)),
                                         "workout events with " + what),
                                contains_type(type)),
                    type + " workouts");
}

OperatorTree count_after_workout(const Slots& s) {
    const auto after = meal_query(s) + " after a workout?";
    auto join = annotate(make_join(meal_branch(s), workout_branch(), after_same_day_predicate()), after);
    return annotate(make_apply(std::move(join), {ApplyFn::Kind::len, {}}),
                    "How often did I eat " + slot(s, "cuisine") + " food after a workout?");
}

OperatorTree count_after_typed_workout(const Slots& s) {
    const auto& type = slot(s, "workout_type");
    const auto after = meal_query(s) + " after a " + type + " workout?";
    auto right = typed_workouts(type, {"date", "end_time"}, "date, end time and workout type");
    auto join = annotate(make_join(meal_branch(s), std::move(right), after_same_day_predicate()), after);
    return annotate(make_apply(std::move(join), {ApplyFn::Kind::len, {}}),
                    "How often did I eat " + slot(s, "cuisine") + " food after a " + type + " workout?");
}

OperatorTree count_workout_type(const Slots& s) {
    const auto& type = slot(s, "workout_type");
    return annotate(make_apply(typed_workouts(type, {}, "workout type"), {ApplyFn::Kind::len, {}}),
                    "How many " + type + " workouts did I do?");
}

OperatorTree count_workout_type_this_year(const Slots& s) {
    const auto& type = slot(s, "workout_type");
    auto extracted = annotate(make_extract(retrieve("workout events"), {"workout_type", "year"}),
                              "workout events with workout type and year");
    auto filtered = annotate(make_filter(std::move(extracted), Expr::call("and", {contains_type(type), this_year()})),
                             type + " workouts this year");
    return annotate(make_apply(std::move(filtered), {ApplyFn::Kind::len, {}}),
                    "How many " + type + " workouts did I do this year?");
}

OperatorTree superlative_month(const std::string& query, const std::string& what, const std::string& question) {
    auto extracted = annotate(make_extract(retrieve(query), {"month"}), what + " with month");
    auto grouped = annotate(make_group_by(std::move(extracted), {"month"}), what + " per month");
    auto counted = annotate(
        make_map(std::move(grouped), {Assignment{"count", Expr::call("len", {Expr::group_ref()})}}),
        "number of " + what + " per month");
    return annotate(make_aggregate(Op::argmax, std::move(counted), "count"), question);
}

OperatorTree superlative_month_artist(const Slots& s) {
    const auto& artist = slot(s, "artist");
    return superlative_month("listening to " + artist, "streams of " + artist,
                             "The month I listened to " + artist + " the most?");
}

OperatorTree superlative_month_series(const Slots& s) {
    const auto& series = slot(s, "series");
    return superlative_month("watching " + series, "episodes of " + series,
                             "The month I watched " + series + " the most?");
}

std::string things_query(const std::string& things) {
    auto t = ascii_lower(things);
    if (t == "workouts") {
        return "workout events";
    }
    if (t == "movies") {
        return "watching movies";
    }
    return "watching tv episodes";
}

OperatorTree count_since_anchor(const Slots& s) {
    const auto& things = slot(s, "things");
    const auto& anchor = slot(s, "anchor");
    auto left = annotate(make_extract(retrieve(things_query(things)), {"date"}), things + " with date");
    auto right = annotate(make_extract(retrieve(anchor), {"date"}), "date of " + anchor);
    auto join = annotate(
        make_join(std::move(left), std::move(right),
                  Expr::call("ge", {Expr::join_attr(JoinSide::left, "date"), Expr::join_attr(JoinSide::right, "date")})),
        things + " since " + anchor);
    return annotate(make_apply(std::move(join), {ApplyFn::Kind::len, {}}),
                    "How many " + things + " since " + anchor + "?");
}

OperatorTree count_artist_month(const Slots& s) {
    const auto& artist = slot(s, "artist");
    const auto& month = slot(s, "month");
    auto key = month_slot_key(month);
    if (!key) {
        throw Error("bad month slot '" + month + "'");
    }
    auto extracted = annotate(make_extract(retrieve("listening to " + artist), {"month"}),
                              "streams of " + artist + " with month");
    auto filtered = annotate(
        make_filter(std::move(extracted), Expr::call("eq", {Expr::attr("month"), Expr::literal(Value(*key))})),
        "streams of " + artist + " in " + month);
    return annotate(make_apply(std::move(filtered), {ApplyFn::Kind::len, {}}),
                    "How many times did I listen to " + artist + " in " + month + "?");
}

OperatorTree sum_spent_year(const Slots& s) {
    const auto& category = slot(s, "category");
    const auto& year = slot(s, "year");
    const auto query = "money spent on " + category;
    auto extracted = annotate(make_extract(retrieve(query), {"price", "year"}), category + " purchases with price and year");
    auto filtered = annotate(make_filter(std::move(extracted), year_is(year)), category + " purchases in " + year);
    return annotate(make_aggregate(Op::sum, std::move(filtered), "price"),
                    "How much money did I spend on " + category + " in " + year + "?");
}

OperatorTree avg_workout_duration(const Slots& s) {
    const auto& type = slot(s, "workout_type");
    return annotate(
        make_aggregate(Op::avg, typed_workouts(type, {"duration_min"}, "duration and workout type"), "duration_min"),
        "What was the average duration of my " + type + " workouts?");
}

OperatorTree max_workout_duration(const Slots& s) {
    const auto& type = slot(s, "workout_type");
    return annotate(
        make_aggregate(Op::max, typed_workouts(type, {"duration_min"}, "duration and workout type"), "duration_min"),
        "What was the duration of my longest " + type + " workout?");
}

OperatorTree count_distinct_artists_year(const Slots& s) {
    const auto& year = slot(s, "year");
    auto extracted = annotate(make_extract(retrieve("music streams"), {"artist", "year"}),
                              "music streams with artist and year");
    auto filtered = annotate(make_filter(std::move(extracted), year_is(year)), "music streams in " + year);
    return annotate(make_apply(std::move(filtered), {ApplyFn::Kind::distinct, "artist"}),
                    "How many different artists did I listen to in " + year + "?");
}

OperatorTree superlative_weekday_workout(const Slots&) {
    auto extracted = annotate(make_extract(retrieve("workout events"), {"weekday"}), "workout events with weekday");
    auto grouped = annotate(make_group_by(std::move(extracted), {"weekday"}), "workout events per weekday");
    auto counted = annotate(
        make_map(std::move(grouped), {Assignment{"count", Expr::call("len", {Expr::group_ref()})}}),
        "number of workouts per weekday");
    return annotate(make_aggregate(Op::argmax, std::move(counted), "count"),
                    "On which weekday did I work out the most?");
}

const std::vector<QuestionTemplate>& templates() {
    static const std::vector<QuestionTemplate> catalog = {
        {"count_after_workout", "How often did I eat {cuisine} food after a workout?", count_after_workout},
        {"count_after_typed_workout", "How often did I eat {cuisine} food after a {workout_type} workout?",
         count_after_typed_workout},
        {"count_workout_type", "How many {workout_type} workouts did I do?", count_workout_type},
        {"count_workout_type_this_year", "How many {workout_type} workouts did I do this year?",
         count_workout_type_this_year},
        {"superlative_month_artist", "The month I listened to {artist} the most?", superlative_month_artist},
        {"superlative_month_series", "The month I watched {series} the most?", superlative_month_series},
        {"count_since_anchor", "How many {things} since {anchor}?", count_since_anchor},
        {"count_artist_month", "How many times did I listen to {artist} in {month}?", count_artist_month},
        {"sum_spent_year", "How much money did I spend on {category} in {year}?", sum_spent_year},
        {"avg_workout_duration", "What was the average duration of my {workout_type} workouts?",
         avg_workout_duration},
        {"max_workout_duration", "What was the duration of my longest {workout_type} workout?",
         max_workout_duration},
        {"count_distinct_artists_year", "How many different artists did I listen to in {year}?",
         count_distinct_artists_year},
        {"superlative_weekday_workout", "On which weekday did I work out the most?", superlative_weekday_workout},
    };
    return catalog;
}

std::string slot_regex(std::string_view name) {
    if (name == "year") return R"((\d{4}))";
    if (name == "month") return R"(([A-Za-z]+ \d{4}))";
    if (name == "workout_type" || name == "cuisine") return R"(([A-Za-z]+))";
    if (name == "things") return R"((workouts|movies|TV episodes))";
    return R"((.+?))";
}

struct CompiledTemplate {
    const QuestionTemplate* tmpl;
    std::regex re;
    std::vector<std::string> slot_names;
};

std::vector<CompiledTemplate> compile_catalog() {
    static const std::regex marker(R"(\{([a-z_]+)\})");
    static const std::regex special(R"([.^$|()\[\]{}*+?\\])");
    std::vector<CompiledTemplate> out;
    for (const auto& t : templates()) {
        CompiledTemplate c{&t, {}, {}};
        std::string re = "^\\s*";
        std::string_view rest = t.pattern;
        std::cmatch m;
        while (std::regex_search(rest.data(), rest.data() + rest.size(), m, marker)) {
            std::string literal(rest.substr(0, static_cast<std::size_t>(m.position(0))));
            re += std::regex_replace(literal, special, R"(\$&)");
            re += slot_regex(m[1].str());
            c.slot_names.push_back(m[1].str());
            rest.remove_prefix(static_cast<std::size_t>(m.position(0) + m.length(0)));
        }
        std::string tail(rest);
        if (!tail.empty() && tail.back() == '?') {
            tail.pop_back();
        }
        re += std::regex_replace(tail, special, R"(\$&)");
        re += R"(\s*\??\s*$)";
        c.re = std::regex(re, std::regex::icase | std::regex::ECMAScript);
        out.push_back(std::move(c));
    }
    return out;
}

constexpr std::array<std::string_view, 12> month_names = {"january", "february", "march",     "april",
                                                          "may",     "june",     "july",      "august",
                                                          "september", "october", "november", "december"};

} // namespace

Expr after_same_day_predicate() {
    return Expr::call("and", {Expr::call("same_day", {Expr::join_attr(JoinSide::left, "date"),
                                                      Expr::join_attr(JoinSide::right, "date")}),
                              Expr::call("gt", {Expr::join_attr(JoinSide::left, "start_time"),
                                                Expr::join_attr(JoinSide::right, "end_time")})});
}

std::span<const QuestionTemplate> template_catalog() {
    return templates();
}

const QuestionTemplate* find_template(std::string_view id) {
    for (const auto& t : templates()) {
        if (t.id == id) {
            return &t;
        }
    }
    return nullptr;
}

std::string render_question(const QuestionTemplate& tmpl, const Slots& slots) {
    std::string out;
    std::string_view p = tmpl.pattern;
    while (!p.empty()) {
        auto open = p.find('{');
        if (open == std::string_view::npos) {
            out += p;
            break;
        }
        auto close = p.find('}', open);
        out += p.substr(0, open);
        out += slot(slots, p.substr(open + 1, close - open - 1));
        p.remove_prefix(close + 1);
    }
    return out;
}

std::optional<TemplateMatch> match_question(std::string_view question) {
    static const std::vector<CompiledTemplate> compiled = compile_catalog();
    const std::string q(question);
    for (const auto& c : compiled) {
        std::smatch m;
        if (!std::regex_match(q, m, c.re)) {
            continue;
        }
        TemplateMatch match{c.tmpl, {}};
        bool ok = true;
        for (std::size_t i = 0; i < c.slot_names.size(); ++i) {
            auto value = m[i + 1].str();
            if (c.slot_names[i] == "month" && !month_slot_key(value)) {
                ok = false;
            }
            match.slots.emplace(c.slot_names[i], std::move(value));
        }
        if (ok) {
            return match;
        }
    }
    return std::nullopt;
}

std::optional<std::string> month_slot_key(std::string_view text) {
    auto space = text.find(' ');
    if (space == std::string_view::npos || text.size() != space + 5) {
        return std::nullopt;
    }
    auto name = ascii_lower(text.substr(0, space));
    auto year = text.substr(space + 1);
    for (std::size_t i = 0; i < month_names.size(); ++i) {
        if (month_names[i] == name) {
            for (char c : year) {
                if (c < '0' || c > '9') {
                    return std::nullopt;
                }
            }
            char buf[8];
            std::snprintf(buf, sizeof buf, "-%02zu", i + 1);
            return std::string(year) + buf;
        }
    }
    return std::nullopt;
}

std::string month_slot_text(std::string_view key) {
    auto month = std::stoi(std::string(key.substr(5, 2)));
    std::string name(month_names.at(static_cast<std::size_t>(month - 1)));
    name[0] = static_cast<char>(name[0] - 'a' + 'A');
    return name + " " + std::string(key.substr(0, 4));
}

} // namespace optree
