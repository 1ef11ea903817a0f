#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "optree/ingest.hpp"
#include "optree/pipeline.hpp"

namespace testsupport {

std::filesystem::path data_dir();
std::filesystem::path test_dir();

/// The nine-event demo persona shipped as data/fixture_f1.jsonl.
const optree::EventStore& f1_store();
/// Pipeline over F1 with the bundled lexicon, gazetteer and aliases.
const optree::Pipeline& f1_pipeline();
optree::EventRef f1_ref(const std::string& id);

/// Seed-42 persona with the default profile, generated once per process.
const optree::GeneratedPersona& generated_persona();
/// Resources built from the persona's own expansion and gazetteer tables
/// (stopwords and aliases from the data directory).
optree::Resources generated_resources(const optree::GeneratedPersona& persona);
const optree::Pipeline& generated_pipeline();

/// Ids of the constituents of each item, sorted within an item, items sorted.
std::vector<std::vector<std::string>> item_ids(const std::vector<optree::ResultItem>& items,
                                               const optree::EventStore& store);

/// Fresh empty directory under the system temp path.
std::filesystem::path scratch_dir(const std::string& name);

} // namespace testsupport
