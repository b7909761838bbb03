#pragma once

// Dispatch of a RunConfig to the library and emission of its result.

#include <iosfwd>
#include <string>

#include "hdim/config.hpp"

namespace hdim {

inline constexpr int kSchemaVersion = 1;
const char* version() noexcept;

// The result document: schema version, binary version, resolved config and
// the subcommand's payload, as JSON or CSV (config echoed as '#' lines).
// Contains no timestamps, so equal configs give byte-identical output.
std::string render_result(const RunConfig& config);

// Writes `content` to a sibling temporary file and renames it over `path`.
void write_atomic(const std::string& path, const std::string& content);

// Validates, runs and writes the result to config.output.path (or `out`
// when the path is empty). Errors go to `diag` as "<ErrorName>: <message>".
// Returns 0, 1 when the output cannot be written, 2 on configuration
// errors, or 3 on numeric failures.
int run(const RunConfig& config, std::ostream& out, std::ostream& diag);

}  // namespace hdim
