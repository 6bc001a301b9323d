#pragma once

#include <optional>
#include <string>

#include "json.hpp"

#include "sofctl/care.hpp"

namespace sofctl::io {

using json = nlohmann::json;

// A system file: dimensions, mode, A, B, C, optional D and optional weights.
struct SystemFile {
    LinearSystem system;
    std::optional<Matrix> Q;
    std::optional<Matrix> R;
};

/// Nested array of rows. Throws InputError naming `field` on ragged or non-numeric data.
Matrix matrix_from_json(const json& j, const std::string& field);
json matrix_to_json(const Matrix& m);

/// Parses text, reporting syntax errors with line and column.
json parse_json_text(const std::string& text, const std::string& source);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

SystemFile system_from_json(const json& j);
json system_to_json(const SystemFile& file);

SystemFile load_system(const std::string& path);
void save_system(const std::string& path, const SystemFile& file);

/// Weight given as "identity", "diag:v1,v2,..." or a path to a JSON file holding
/// either a nested array or an object with a `key` entry.
Matrix parse_weight_spec(const std::string& spec, Index size, const std::string& key);

/// Gain file: {"F": [[...]]}, a bare nested array, or a synthesis report.
Matrix load_gain(const std::string& path);

/// %.17g formatting, which round-trips every double.
std::string format_double(double v);

}  // namespace sofctl::io
