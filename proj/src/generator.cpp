#include "optree/ingest.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <fstream>
#include <set>

namespace optree {

std::int64_t uniform_int(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi) {
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) {
        return static_cast<std::int64_t>(rng());
    }
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % span;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return lo + static_cast<std::int64_t>(x % span);
}

namespace {

template <typename T>
void shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        auto j = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(i - 1)));
        std::swap(v[i - 1], v[j]);
    }
}

/// Linearly decreasing weights: the first preference is drawn most often.
const std::string& pick_weighted(const std::vector<std::string>& items, std::mt19937_64& rng) {
    const auto n = static_cast<std::int64_t>(items.size());
    auto ticket = uniform_int(rng, 0, n * (n + 1) / 2 - 1);
    for (std::int64_t i = 0; i < n; ++i) {
        ticket -= n - i;
        if (ticket < 0) {
            return items[static_cast<std::size_t>(i)];
        }
    }
    return items.back();
}

template <typename T>
const T& pick(const std::vector<T>& items, std::mt19937_64& rng) {
    return items[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(items.size()) - 1))];
}

std::string capitalized(std::string s) {
    if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') {
        s[0] = static_cast<char>(s[0] - 'a' + 'A');
    }
    return s;
}

constexpr std::array<int, 9> all_hours = {6, 8, 10, 12, 14, 16, 18, 20, 22};

/// Hands out two-hour slots; events inside distinct slots never overlap.
class SlotBook {
public:
    SlotBook(Date first, Date last) : first_(first), days_(last.days - first.days + 1) {}

    DateTime take(std::span<const int> hours, std::mt19937_64& rng, Date from, Date to) {
        for (int attempt = 0; attempt < 10000; ++attempt) {
            Date day{static_cast<std::int32_t>(uniform_int(rng, from.days, to.days))};
            int hour = hours[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(hours.size()) - 1))];
            if (taken_.insert({day.days, hour}).second) {
                return make_datetime(day, hour, 0);
            }
        }
        throw Error("generator ran out of free time slots; lower the event counts or widen the date range");
    }

    DateTime take(std::span<const int> hours, std::mt19937_64& rng) {
        return take(hours, rng, first_, Date{first_.days + days_ - 1});
    }

private:
    Date first_;
    std::int32_t days_;
    std::set<std::pair<std::int32_t, int>> taken_;
};

DateTime plus(DateTime t, std::int64_t minutes) {
    return DateTime{t.minutes + minutes};
}

class Builder {
public:
    Builder(const PersonaProfile& p, std::uint64_t seed) : profile_(p), rng_(seed), slots_(p.first, p.last) {}

    GeneratedPersona run();

private:
    const std::vector<std::string>& prefs(const std::string& category) const;
    std::string event_id(std::size_t n) const {
        auto digits = std::to_string(n);
        return profile_.name + "-" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits;
    }
    Event& add(SourceKind source, DateTime start, DateTime end);
    void workouts(int n);
    void music(int n);
    void movies(int n);
    void series(int n);
    void purchases(int n);
    void calendar(int n);
    void mails(int n);
    void posts(int n);
    void duplicates();

    const PersonaProfile& profile_;
    std::mt19937_64 rng_;
    SlotBook slots_;
    GeneratedPersona out_;
    std::vector<std::size_t> workout_idx_;
    std::vector<std::size_t> purchase_idx_;
    std::vector<std::size_t> dinner_idx_;
    std::vector<std::pair<std::size_t, std::string>> dinner_place_;
};

const std::vector<std::string>& Builder::prefs(const std::string& category) const {
    static const std::vector<std::string> none;
    auto it = profile_.preferences.find(category);
    return it == profile_.preferences.end() ? none : it->second;
}

Event& Builder::add(SourceKind source, DateTime start, DateTime end) {
    Event e;
    e.id = event_id(out_.events.size() + 1);
    e.persona = profile_.name;
    e.source = source;
    e.scope = {start, end};
    out_.events.push_back(std::move(e));
    return out_.events.back();
}

void Builder::workouts(int n) {
    static constexpr std::array<int, 3> hours = {6, 8, 16};
    const auto& types = prefs("workout_types");
    for (int i = 0; i < n; ++i) {
        auto start = plus(slots_.take(hours, rng_), uniform_int(rng_, 0, 29));
        auto minutes = uniform_int(rng_, 20, 90);
        auto& e = add(SourceKind::Workout, start, plus(start, minutes));
        e.fields.emplace("workout_type", pick_weighted(types, rng_));
        e.fields.emplace("duration_min", minutes);
        workout_idx_.push_back(out_.events.size() - 1);
    }
}

void Builder::music(int n) {
    const auto& artists = prefs("artists");
    for (int i = 0; i < n; ++i) {
        auto start = plus(slots_.take(all_hours, rng_), uniform_int(rng_, 0, 59));
        const auto& artist = pick_weighted(artists, rng_);
        auto& e = add(SourceKind::MusicStream, start, plus(start, uniform_int(rng_, 3, 5)));
        e.fields.emplace("artist", artist);
        e.fields.emplace("track", pick(vocabulary().artist(artist)->tracks, rng_));
    }
}

void Builder::movies(int n) {
    static constexpr std::array<int, 2> hours = {20, 22};
    for (int i = 0; i < n; ++i) {
        auto start = slots_.take(hours, rng_);
        auto& e = add(SourceKind::MovieStream, start, plus(start, uniform_int(rng_, 90, 119)));
        e.fields.emplace("title", pick(vocabulary().movies, rng_));
    }
}

void Builder::series(int n) {
    static constexpr std::array<int, 2> hours = {20, 22};
    const auto& shows = prefs("series");
    for (int i = 0; i < n; ++i) {
        auto start = plus(slots_.take(hours, rng_), uniform_int(rng_, 0, 59));
        auto& e = add(SourceKind::TvSeriesStream, start, plus(start, uniform_int(rng_, 25, 59)));
        e.fields.emplace("series", pick_weighted(shows, rng_));
        e.fields.emplace("season", uniform_int(rng_, 1, 4));
        e.fields.emplace("episode", uniform_int(rng_, 1, 10));
    }
}

void Builder::purchases(int n) {
    static constexpr std::array<int, 7> hours = {8, 10, 12, 14, 16, 18, 20};
    const auto& categories = prefs("categories");
    for (int i = 0; i < n; ++i) {
        auto at = plus(slots_.take(hours, rng_), uniform_int(rng_, 0, 59));
        const auto* cat = vocabulary().category(pick_weighted(categories, rng_));
        auto cents = uniform_int(rng_, cat->min_cents, cat->max_cents);
        auto& e = add(SourceKind::Purchase, at, at);
        e.fields.emplace("category", cat->name);
        e.fields.emplace("product", pick(cat->products, rng_));
        e.fields.emplace("price", static_cast<double>(cents) / 100.0);
        purchase_idx_.push_back(out_.events.size() - 1);
    }
}

void Builder::calendar(int n) {
    static constexpr std::array<int, 1> lunch = {12};
    static constexpr std::array<int, 2> dinner = {18, 20};
    const auto& vocab = vocabulary();
    const auto& cuisines = prefs("cuisines");

    const int anchors = std::min<int>(n, static_cast<int>(vocab.anchors.size()));
    for (int i = 0; i < anchors; ++i) {
        // Keep anchors away from the range edges so "since" questions have material.
        Date from{profile_.first.days + 60};
        Date to{std::max(from.days, profile_.last.days - 60)};
        auto start = slots_.take(all_hours, rng_, from, to);
        auto& e = add(SourceKind::CalendarEntry, start, plus(start, 60));
        e.fields.emplace("summary", vocab.anchors[static_cast<std::size_t>(i)].summary);
    }
    const int meals = (n - anchors) * 6 / 10;
    for (int i = 0; i < meals; ++i) {
        const auto* cuisine = vocab.cuisine(pick_weighted(cuisines, rng_));
        const auto& place = pick(cuisine->restaurants, rng_);
        const bool is_dinner = uniform_int(rng_, 0, 2) != 0;
        auto start = plus(is_dinner ? slots_.take(dinner, rng_) : slots_.take(lunch, rng_), uniform_int(rng_, 0, 9));
        auto& e = add(SourceKind::CalendarEntry, start, plus(start, uniform_int(rng_, 60, 110)));
        e.fields.emplace("summary", std::string(is_dinner ? "Dinner at " : "Lunch at ") + place);
        if (is_dinner) {
            dinner_idx_.push_back(out_.events.size() - 1);
            dinner_place_.emplace_back(out_.events.size() - 1, place);
        }
    }
    for (int i = anchors + meals; i < n; ++i) {
        auto start = plus(slots_.take(all_hours, rng_), uniform_int(rng_, 0, 59));
        auto& e = add(SourceKind::CalendarEntry, start, plus(start, uniform_int(rng_, 30, 60)));
        e.fields.emplace("summary", pick(vocab.calendar_fillers, rng_));
    }
}

void Builder::mails(int n) {
    static constexpr std::array<int, 3> meal_hours = {12, 18, 20};
    const auto& vocab = vocabulary();
    const auto& cuisines = prefs("cuisines");
    const int reservations = n * 4 / 10;
    for (int i = 0; i < reservations; ++i) {
        const auto* cuisine = vocab.cuisine(pick_weighted(cuisines, rng_));
        auto at = plus(slots_.take(meal_hours, rng_), uniform_int(rng_, 0, 59));
        auto& e = add(SourceKind::Mail, at, at);
        e.text = "Your table at " + pick(cuisine->restaurants, rng_) + " is confirmed";
    }
    for (int i = reservations; i < n; ++i) {
        auto at = plus(slots_.take(all_hours, rng_), uniform_int(rng_, 0, 59));
        auto& e = add(SourceKind::Mail, at, at);
        e.text = pick(vocab.mail_fillers, rng_);
    }
}

void Builder::posts(int n) {
    for (int i = 0; i < n; ++i) {
        auto at = plus(slots_.take(all_hours, rng_), uniform_int(rng_, 0, 59));
        auto& e = add(SourceKind::SocialMediaPost, at, at);
        e.text = pick(vocabulary().post_fillers, rng_);
    }
}

void Builder::duplicates() {
    auto choose = [&](std::vector<std::size_t> pool) {
        auto k = static_cast<std::size_t>(std::llround(profile_.duplicate_fraction * static_cast<double>(pool.size())));
        shuffle(pool, rng_);
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    };
    auto plant = [&](std::size_t base, Event dup) {
        dup.id = event_id(out_.events.size() + 1);
        dup.persona = profile_.name;
        out_.planted.push_back({out_.events[base].id, dup.id});
        out_.events.push_back(std::move(dup));
    };
    auto point_inside = [&](const TemporalScope& s) {
        auto t = plus(s.start, uniform_int(rng_, 0, s.end.minutes - s.start.minutes));
        return TemporalScope{t, t};
    };

    for (auto i : choose(workout_idx_)) {
        const auto base = out_.events[i];
        const auto& type = base.fields.at("workout_type").as_str();
        Event dup;
        if (uniform_int(rng_, 0, 1) == 0) {
            dup.source = SourceKind::SocialMediaPost;
            dup.scope = point_inside(base.scope);
            dup.text = "Great " + type + " session today!";
        } else {
            dup.source = SourceKind::CalendarEntry;
            dup.scope = base.scope;
            dup.fields.emplace("summary", capitalized(type) + " training");
        }
        plant(i, std::move(dup));
    }
    for (auto i : choose(dinner_idx_)) {
        const auto base = out_.events[i];
        auto place = std::find_if(dinner_place_.begin(), dinner_place_.end(), [&](auto& p) { return p.first == i; });
        Event dup;
        dup.source = SourceKind::SocialMediaPost;
        dup.scope = point_inside(base.scope);
        dup.text = "Amazing dinner at " + place->second + "!";
        plant(i, std::move(dup));
    }
    for (auto i : choose(purchase_idx_)) {
        const auto base = out_.events[i];
        Event dup;
        dup.source = SourceKind::Mail;
        dup.scope = base.scope;
        dup.text = "Your order of " + base.fields.at("product").as_str() + " has shipped";
        plant(i, std::move(dup));
    }
}

int count_of(const PersonaProfile& p, SourceKind k) {
    auto it = p.counts.find(k);
    return it == p.counts.end() ? 0 : it->second;
}

GeneratedPersona Builder::run() {
    out_.profile = profile_;
    workouts(count_of(profile_, SourceKind::Workout));
    music(count_of(profile_, SourceKind::MusicStream));
    movies(count_of(profile_, SourceKind::MovieStream));
    series(count_of(profile_, SourceKind::TvSeriesStream));
    purchases(count_of(profile_, SourceKind::Purchase));
    calendar(count_of(profile_, SourceKind::CalendarEntry));
    mails(count_of(profile_, SourceKind::Mail));
    posts(count_of(profile_, SourceKind::SocialMediaPost));
    duplicates();
    out_.expansions = vocabulary_expansions();
    out_.gazetteer = vocabulary_gazetteer();
    return std::move(out_);
}

} // namespace

void PersonaProfile::validate() const {
    if (name.empty() || !is_field_key(name)) {
        throw ConfigError("persona name must be lowercase snake_case");
    }
    if (first > last) {
        throw ConfigError("persona date range is empty");
    }
    if (!(duplicate_fraction >= 0.0 && duplicate_fraction <= 1.0)) {
        throw ConfigError("duplicate fraction must lie in [0, 1]");
    }
    for (const auto& [kind, n] : counts) {
        if (n < 0) {
            throw ConfigError("negative count for " + std::string(source_name(kind)));
        }
    }
    const auto& v = vocabulary();
    auto require = [&](const std::string& category, auto known, SourceKind needed_by) {
        auto it = preferences.find(category);
        const bool needed = count_of(*this, needed_by) > 0;
        if (it == preferences.end() || it->second.empty()) {
            if (needed) {
                throw ConfigError("preferences need at least one entry for '" + category + "'");
            }
            return;
        }
        for (const auto& item : it->second) {
            if (!known(item)) {
                throw ConfigError("'" + item + "' is not in the generator vocabulary for '" + category + "'");
            }
        }
    };
    auto in = [](const std::vector<std::string>& list) {
        return [&list](const std::string& s) {
            return std::any_of(list.begin(), list.end(), [&](auto& x) { return ascii_lower(x) == ascii_lower(s); });
        };
    };
    require("artists", [&](const std::string& s) { return v.artist(s) != nullptr; }, SourceKind::MusicStream);
    require("cuisines", [&](const std::string& s) { return v.cuisine(s) != nullptr; }, SourceKind::CalendarEntry);
    require("categories", [&](const std::string& s) { return v.category(s) != nullptr; }, SourceKind::Purchase);
    require("workout_types", in(v.workout_types), SourceKind::Workout);
    require("series", in(v.series), SourceKind::TvSeriesStream);
    if (count_of(*this, SourceKind::Mail) > 0 && !preferences.contains("cuisines")) {
        throw ConfigError("preferences need at least one entry for 'cuisines'");
    }
}

PersonaProfile default_profile(std::string name) {
    PersonaProfile p;
    p.name = std::move(name);
    p.preferences = {
        {"artists", {"Taylor Swift", "Norah Jones", "Miles Davis", "Billie Eilish", "Hans Zimmer", "Ella Fitzgerald"}},
        {"cuisines", {"Italian", "Japanese", "Mexican", "Indian", "Thai"}},
        {"workout_types", {"running", "yoga", "cycling", "swimming", "pilates", "boxing", "rowing"}},
        {"series", {"The Crown", "Breaking Bad", "Stranger Things", "Severance", "Succession"}},
        {"categories", {"books", "clothing", "electronics"}},
    };
    p.counts = {
        {SourceKind::MusicStream, 800},    {SourceKind::MovieStream, 80},   {SourceKind::TvSeriesStream, 250},
        {SourceKind::Workout, 320},        {SourceKind::Purchase, 150},     {SourceKind::CalendarEntry, 260},
        {SourceKind::SocialMediaPost, 100}, {SourceKind::Mail, 120},
    };
    return p;
}

GeneratedPersona generate_persona(const PersonaProfile& profile, std::uint64_t seed) {
    profile.validate();
    return Builder(profile, seed).run();
}

void write_generated(const GeneratedPersona& persona, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto open = [&](const char* name) {
        std::ofstream out(dir / name, std::ios::binary);
        if (!out) {
            throw Error("cannot write " + (dir / name).string());
        }
        return out;
    };
    {
        auto out = open("events.jsonl");
        write_events(out, persona.events);
    }
    {
        auto out = open("planted.tsv");
        for (const auto& p : persona.planted) {
            out << p.base_id << '\t' << p.duplicate_id << '\n';
        }
    }
    open("expansion.tsv") << persona.expansions;
    open("gazetteer.tsv") << persona.gazetteer;
}

} // namespace optree
