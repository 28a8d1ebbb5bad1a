#pragma once

#include <chrono>
#include <functional>
#include <string>
#include <string_view>

namespace evacnet {

/// All pipeline timestamps are UTC with one-second resolution.
using Timestamp = std::chrono::sys_seconds;

/// Source of "now"; replays inject a simulated clock.
using Clock = std::function<Timestamp()>;

Timestamp system_now();

/// Accepts `YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)`; fractional seconds
/// are truncated. Throws Error(MalformedTimestamp).
Timestamp parse_rfc3339(std::string_view text);

/// Always renders UTC with a trailing `Z`.
std::string format_rfc3339(Timestamp t);

int utc_year(Timestamp t);

}  // namespace evacnet
