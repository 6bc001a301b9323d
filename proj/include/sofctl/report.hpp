#pragma once

#include <optional>
#include <string>

#include "sofctl/io.hpp"
#include "sofctl/sof.hpp"
#include "sofctl/verify.hpp"

namespace sofctl::report {

using io::json;

inline constexpr const char* kToolVersion = "0.1.0";

json spectrum_to_json(const Spectrum& s);
json riccati_to_json(const RiccatiSolution& r);
json precheck_to_json(const StructureReport& s);
json sof_result_to_json(const SofResult& res);
json options_to_json(const SofOptions& o);
json certificate_to_json(const CertificateReport& c);
json dissipation_to_json(const DissipationReport& d);

/// Wraps a command payload with tool name/version and, unless null, the wall time.
json envelope(const std::string& command, json payload, std::optional<double> wall_seconds);

/// "json" dumps with two-space indentation; "text" flattens to one "path: value" line
/// per scalar and one line per matrix row.
std::string render(const json& report, const std::string& format);

}  // namespace sofctl::report
