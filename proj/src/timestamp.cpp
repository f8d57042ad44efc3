#include "duprate/timestamp.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace duprate {

namespace {

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    for (std::size_t i = pos; i < pos + len; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    auto r = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return r.ec == std::errc{};
}

}  // namespace

std::optional<Days> parse_iso8601(std::string_view s) {
    using namespace std::chrono;
    int y = 0, mo = 0, d = 0;
    if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || s[7] != '-' ||
        !read_int(s, 5, 2, mo) || !read_int(s, 8, 2, d))
        return std::nullopt;
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    double seconds = 0.0;
    std::size_t pos = 10;
    if (pos < s.size()) {
        if (s[pos] != 'T' && s[pos] != ' ') return std::nullopt;
        int hh = 0, mm = 0;
        if (!read_int(s, pos + 1, 2, hh) || s.size() < pos + 6 || s[pos + 3] != ':' ||
            !read_int(s, pos + 4, 2, mm) || hh > 23 || mm > 59)
            return std::nullopt;
        seconds = hh * 3600.0 + mm * 60.0;
        pos += 6;
        if (pos < s.size() && s[pos] == ':') {
            int ss = 0;
            if (!read_int(s, pos + 1, 2, ss) || ss > 60) return std::nullopt;
            seconds += ss;
            pos += 3;
            if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
                std::size_t end = pos + 1;
                while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
                if (end == pos + 1) return std::nullopt;
                std::string frac = "0." + std::string(s.substr(pos + 1, end - pos - 1));
                double f = 0.0;
                std::from_chars(frac.data(), frac.data() + frac.size(), f);
                seconds += f;
                pos = end;
            }
        }
        if (pos < s.size()) {
            if (s[pos] == 'Z' && pos + 1 == s.size()) {
                pos += 1;
            } else if (s[pos] == '+' || s[pos] == '-') {
                const int sign = s[pos] == '+' ? 1 : -1;
                int oh = 0, om = 0;
                if (!read_int(s, pos + 1, 2, oh)) return std::nullopt;
                std::size_t mpos = pos + 3;
                if (mpos < s.size() && s[mpos] == ':') ++mpos;
                if (!read_int(s, mpos, 2, om) || mpos + 2 != s.size()) return std::nullopt;
                seconds -= sign * (oh * 3600.0 + om * 60.0);
                pos = s.size();
            } else {
                return std::nullopt;
            }
        }
    }
    const auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<double>(days) + seconds / 86400.0;
}

std::string format_iso8601(Days t) {
    using namespace std::chrono;
    const auto whole = static_cast<long long>(std::floor(t));
    long long micros = std::llround((t - static_cast<double>(whole)) * 86400.0e6);
    long long day_count = whole;
    if (micros >= 86400LL * 1000000LL) {
        micros -= 86400LL * 1000000LL;
        ++day_count;
    }
    const year_month_day ymd{sys_days{days{day_count}}};
    const long long secs = micros / 1000000LL;
    char buf[48];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lld.%06lldZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), secs / 3600, (secs / 60) % 60, secs % 60,
                  micros % 1000000LL);
    return buf;
}

}  // namespace duprate
