#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "optree/error.hpp"
#include "optree/event.hpp"
#include "optree/result.hpp"

namespace optree {

class ExtractorUnavailable : public Error {
public:
    using Error::Error;
};

/// Source of attribute values that are not stored as event fields.
class Extractor {
public:
    virtual ~Extractor() = default;
    virtual std::string_view name() const = 0;
    /// Value of `key` for the given event, or Null when the text does not
    /// state it. Throws ExtractorUnavailable when the backend cannot answer.
    virtual Value extract(const Event& event, std::string_view verbalization, std::string_view key) const = 0;
};

/// Keyword table: for each key, an ordered list of (substring, value) rules.
/// Matching is case-insensitive and the first rule that matches wins.
class Gazetteer {
public:
    struct Rule {
        std::string pattern; // lowercase
        std::string value;
    };

    /// Lines `key TAB pattern TAB value`; '#' comments. Throws ParseError.
    static Gazetteer parse(std::string_view text);
    static Gazetteer load(const std::filesystem::path& path);

    void add(std::string key, std::string pattern, std::string value);
    void merge(const Gazetteer& other);
    std::optional<std::string> match(std::string_view key, std::string_view text) const;
    bool empty() const { return rules_.empty(); }
    std::string text() const;

private:
    std::map<std::string, std::vector<Rule>, std::less<>> rules_;
};

/// Alternative field names accepted for a requested key, e.g. `artist` for `performer`.
class AliasTable {
public:
    /// Lines `key TAB alias,alias`; '#' comments. Throws ParseError.
    static AliasTable parse(std::string_view text);
    static AliasTable load(const std::filesystem::path& path);

    void add(std::string key, std::vector<std::string> aliases);
    std::span<const std::string> aliases(std::string_view key) const;

private:
    std::map<std::string, std::vector<std::string>, std::less<>> aliases_;
};

class GazetteerExtractor : public Extractor {
public:
    explicit GazetteerExtractor(Gazetteer gazetteer) : gazetteer_(std::move(gazetteer)) {}
    std::string_view name() const override { return "gazetteer"; }
    Value extract(const Event& event, std::string_view verbalization, std::string_view key) const override;

private:
    Gazetteer gazetteer_;
};

/// Keys computed from the temporal scope of an event.
bool is_derived_key(std::string_view key);
Value derived_value(const Event& event, std::string_view key);

struct ExtractFailure {
    EventRef ref = 0;
    std::string key;
    std::string message;
};

struct ExtractedItem {
    EventRef ref = 0; // canonical constituent
    AttrMap values;   // only the keys this operator added
};

struct ExtractDetail {
    std::vector<std::string> keys;
    std::vector<ExtractedItem> items;
    std::size_t from_scope = 0;
    std::size_t from_fields = 0;
    std::size_t from_extractor = 0;
    std::size_t missing = 0;
    std::vector<ExtractFailure> failures;
};

/// Value of `key` for a (possibly merged) item: scope-derived keys from the
/// canonical event, then a stored field or alias on any constituent by
/// priority, then the extractor over the canonical verbalization.
Value extract_value(const ResultItem& item, std::string_view key, const EventStore& store, const AliasTable& aliases,
                    const Extractor& extractor, ExtractDetail* detail = nullptr);

/// Adds the keys to every item; attributes already present are kept.
void extract_attributes(std::vector<ResultItem>& items, std::span<const std::string> keys, const EventStore& store,
                        const AliasTable& aliases, const Extractor& extractor, ExtractDetail* detail = nullptr);

} // namespace optree
