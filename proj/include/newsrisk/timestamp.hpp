#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace newsrisk {

using Timestamp = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional "Z" or
/// "+HH:MM"/"-HH:MM" offset. Result is UTC. Throws ParseError.
Timestamp parse_iso8601(std::string_view text);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_iso8601(Timestamp t);

/// "YYYY-MM" / "YYYY" period keys at UTC calendar boundaries.
std::string month_key(Timestamp t);
std::string year_key(Timestamp t);

}  // namespace newsrisk
