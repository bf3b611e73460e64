#pragma once

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>

namespace covfilt {

using Json = nlohmann::ordered_json;

/// 17 significant digits; integral values keep a trailing ".0".
std::string format_number(double v);

/// Serializes with every floating-point field at 17 significant digits
/// (non-finite values become null). Output ends with a newline.
void write_json(std::ostream& os, const Json& value, int indent = 2);
std::string dump_json(const Json& value, int indent = 2);

Json read_json_file(const std::filesystem::path& path);

}  // namespace covfilt
