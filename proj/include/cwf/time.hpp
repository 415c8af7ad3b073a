#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace cwf {

// UTC instant with whole-second resolution. No local time or DST anywhere.
using Timestamp = std::chrono::sys_seconds;

inline constexpr std::chrono::seconds kHour{3600};

constexpr Timestamp from_unix(std::int64_t seconds) { return Timestamp{std::chrono::seconds{seconds}}; }
constexpr std::int64_t to_unix(Timestamp t) { return t.time_since_epoch().count(); }

constexpr bool is_hour_aligned(Timestamp t) { return to_unix(t) % 3600 == 0; }

// Accepts "YYYY-MM-DDTHH:MM:SS" or "YYYY-MM-DD HH:MM:SS", with an optional
// trailing "Z" or "+00:00", or a bare date "YYYY-MM-DD". Other offsets are rejected.
std::optional<Timestamp> parse_iso8601(std::string_view text);

// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_iso8601(Timestamp t);

// Calendar-month shift keeping the time of day; the day is clamped to the
// target month's length.
Timestamp add_months(Timestamp t, int months);

// Start of the anchored month (day `anchor_day`, 00:00 UTC) containing t.
Timestamp anchored_month_start(Timestamp t, unsigned anchor_day);

// First anchored month boundary at or after t.
Timestamp anchored_month_on_or_after(Timestamp t, unsigned anchor_day);

// Monday 00:00 UTC of the ISO week containing t.
Timestamp week_start(Timestamp t);

}  // namespace cwf
