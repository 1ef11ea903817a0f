#include "support/fixtures.hpp"

#include <algorithm>

namespace testsupport {

using namespace optree;

std::filesystem::path data_dir() {
    return OPTREE_DATA_DIR;
}

std::filesystem::path test_dir() {
    return OPTREE_TEST_DIR;
}

const EventStore& f1_store() {
    static const EventStore store = load_events(data_dir() / "fixture_f1.jsonl");
    return store;
}

const Pipeline& f1_pipeline() {
    static const auto pipeline =
        std::make_unique<Pipeline>(f1_store(), Resources::bundled(), RetrievalConfig{});
    return *pipeline;
}

EventRef f1_ref(const std::string& id) {
    return f1_store().find(id).value();
}

const GeneratedPersona& generated_persona() {
    static const GeneratedPersona persona = generate_persona(default_profile(), 42);
    return persona;
}

Resources generated_resources(const GeneratedPersona& persona) {
    Resources r;
    r.lexicon = Lexicon::parse(read_text_file(data_dir() / "stopwords.txt"), persona.expansions);
    r.gazetteer = Gazetteer::parse(persona.gazetteer);
    r.aliases = AliasTable::load(data_dir() / "aliases.tsv");
    return r;
}

const Pipeline& generated_pipeline() {
    static const auto pipeline = [] {
        const auto& persona = generated_persona();
        return std::make_unique<Pipeline>(EventStore(persona.events), generated_resources(persona),
                                          RetrievalConfig{});
    }();
    return *pipeline;
}

std::vector<std::vector<std::string>> item_ids(const std::vector<ResultItem>& items, const EventStore& store) {
    std::vector<std::vector<std::string>> out;
    for (const auto& item : items) {
        std::vector<std::string> ids;
        for (auto r : item.events) {
            ids.push_back(store[r].id);
        }
        std::sort(ids.begin(), ids.end());
        out.push_back(std::move(ids));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("optree-test-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

} // namespace testsupport
