#include "cwf/time.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace cwf {

namespace {

using namespace std::chrono;

bool read_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > text.size()) {
        return false;
    }
    const char* first = text.data() + pos;
    const char* last = first + len;
    for (const char* p = first; p != last; ++p) {
        if (*p < '0' || *p > '9') {
            return false;
        }
    }
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

sys_days to_days(Timestamp t) { return floor<days>(t); }

}  // namespace

std::optional<Timestamp> parse_iso8601(std::string_view text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    if (!read_int(text, 0, 4, y) || text.size() < 10 || text[4] != '-' || !read_int(text, 5, 2, mo) ||
        text[7] != '-' || !read_int(text, 8, 2, d)) {
        return std::nullopt;
    }
    std::size_t pos = 10;
    if (pos < text.size()) {
        if (text[pos] != 'T' && text[pos] != ' ') {
            return std::nullopt;
        }
        if (!read_int(text, pos + 1, 2, h) || text.size() < pos + 9 || text[pos + 3] != ':' ||
            !read_int(text, pos + 4, 2, mi) || text[pos + 6] != ':' || !read_int(text, pos + 7, 2, s)) {
            return std::nullopt;
        }
        pos += 9;
        const std::string_view zone = text.substr(pos);
        if (!(zone.empty() || zone == "Z" || zone == "+00:00")) {
            return std::nullopt;
        }
    }
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
        return std::nullopt;
    }
    return Timestamp{sys_days{ymd}} + hours{h} + minutes{mi} + seconds{s};
}

std::string format_iso8601(Timestamp t) {
    const sys_days dp = to_days(t);
    const year_month_day ymd{dp};
    const hh_mm_ss tod{t - dp};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                  static_cast<int>(tod.hours().count()), static_cast<int>(tod.minutes().count()),
                  static_cast<int>(tod.seconds().count()));
    return buf;
}

Timestamp add_months(Timestamp t, int months) {
    const sys_days dp = to_days(t);
    const auto tod = t - dp;
    year_month_day ymd{dp};
    year_month_day shifted = ymd.year() / ymd.month() / ymd.day();
    shifted += std::chrono::months{months};
    if (!shifted.ok()) {
        shifted = year_month_day_last{shifted.year(), month_day_last{shifted.month()}};
    }
    return Timestamp{sys_days{shifted}} + tod;
}

Timestamp anchored_month_start(Timestamp t, unsigned anchor_day) {
    if (anchor_day < 1 || anchor_day > 28) {
        throw std::invalid_argument("anchor day must be in [1, 28]");
    }
    const year_month_day ymd{to_days(t)};
    year_month_day start = ymd.year() / ymd.month() / day{anchor_day};
    Timestamp candidate{sys_days{start}};
    if (candidate > t) {
        candidate = add_months(candidate, -1);
    }
    return candidate;
}

Timestamp anchored_month_on_or_after(Timestamp t, unsigned anchor_day) {
    const Timestamp start = anchored_month_start(t, anchor_day);
    return start == t ? start : add_months(start, 1);
}

Timestamp week_start(Timestamp t) {
    const sys_days dp = to_days(t);
    const weekday wd{dp};
    const auto since_monday = (wd - Monday).count();
    return Timestamp{dp - days{since_monday}};
}

}  // namespace cwf
