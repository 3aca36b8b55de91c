#pragma once

#include <istream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dsa/netmodel.hpp"

namespace dsa {

struct LoadOptions {
    /// Unknown keys become warnings instead of a ParseError.
    bool lenient = false;
    std::vector<std::string>* warnings = nullptr;
};

/// Parses and validates a snapshot document.
/// Throws ParseError for malformed JSON or fields, ValidationError for
/// dangling references and invariant violations.
Snapshot load_snapshot(std::istream& source, const LoadOptions& opts = {});
Snapshot load_snapshot_file(const std::string& path, const LoadOptions& opts = {});
Snapshot snapshot_from_json(const nlohmann::json& doc, const LoadOptions& opts = {});

nlohmann::ordered_json to_json(const Snapshot& snap);
std::string serialize(const Snapshot& snap);

std::vector<Modification> modifications_from_json(const nlohmann::json& doc);
nlohmann::ordered_json to_json(const std::vector<Modification>& mods);

}  // namespace dsa
