#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

#include "hmmon/model.hpp"

namespace hmmon {

enum class ModelKind { hmm, dfa };

using Model = std::variant<Hmm, Dfa>;

// JSON model documents. `source` names the input in error messages.
Hmm parse_hmm(std::string_view text, std::string_view source = "<input>");
Dfa parse_dfa(std::string_view text, std::string_view source = "<input>");
Model parse_model(std::string_view text, std::string_view source = "<input>");

// Reads and validates a model file; throws ParseError / ValidationError.
Model load_model(const std::filesystem::path& path);
Hmm load_hmm(const std::filesystem::path& path);
Dfa load_dfa(const std::filesystem::path& path);

// Canonical JSON (2-space indent, trailing newline); stable byte-for-byte.
std::string to_json(const Hmm& model);
std::string to_json(const Dfa& monitor);

std::string to_dot(const Hmm& model);
std::string to_dot(const Dfa& monitor);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace hmmon
