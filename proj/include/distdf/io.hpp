#pragma once

#include <string>

#include <json.hpp>

namespace distdf::io {

/// %.17g; non-finite values become "nan" / "inf" / "-inf".
std::string format_number(double x);

/// JSON text with every floating-point number at 17 significant digits
/// (non-finite numbers are written as null). indent < 0 gives one line.
std::string dump_json(const nlohmann::ordered_json& j, int indent = 2);

/// Writes to a sibling temporary file and renames it into place, creating
/// parent directories. Throws InputError when the path is not writable.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace distdf::io
