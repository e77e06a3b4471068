#pragma once

// Self-describing JSON model documents. Doubles are written in shortest
// round-trip form, so save/load is bit-exact.

#include <filesystem>
#include <string>
#include <string_view>

#include "monolink/model.hpp"

namespace monolink {

std::string model_to_json(const Model& m);
// Throws ParseError on malformed documents and DataError on inconsistent ones.
Model model_from_json(std::string_view text);

void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

// 16 hex digits identifying the serialised model.
std::string model_hash(const Model& m);

// FNV-1a of arbitrary bytes, as 16 hex digits.
std::string content_hash(std::string_view bytes);

}  // namespace monolink
