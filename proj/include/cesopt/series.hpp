#pragma once

// Quarter-hourly value series with a calendar anchor, plus CSV I/O.

#include "cesopt/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace cesopt {

inline constexpr int kStepMinutes = 15;
inline constexpr int kStepsPerDay = 96;
inline constexpr int kDaysPerYear = 365;
inline constexpr int kStepsPerYear = kStepsPerDay * kDaysPerYear;   // 35,040
inline constexpr double kStepHours = 0.25;

enum class Unit { kWh_el, kWh_th, kWh_fuel, EUR_per_kWh, kWh_per_m2 };

inline const char* to_string(Unit u) {
    switch (u) {
        case Unit::kWh_el: return "kWh_el";
        case Unit::kWh_th: return "kWh_th";
        case Unit::kWh_fuel: return "kWh_fuel";
        case Unit::EUR_per_kWh: return "EUR_per_kWh";
        case Unit::kWh_per_m2: return "kWh_per_m2";
    }
    return "?";
}

// Prices may be negative; every other unit is an energy amount.
inline bool allows_negative(Unit u) { return u == Unit::EUR_per_kWh; }

struct Timestamp {
    int year = 2015, month = 1, day = 1, hour = 0, minute = 0;

    // Minutes since 1970-01-01T00:00 on the proleptic Gregorian calendar.
    long long epoch_minutes() const {
        int y = year - (month <= 2 ? 1 : 0);
        const int era = (y >= 0 ? y : y - 399) / 400;
        const int yoe = y - era * 400;
        const int mp = (month + 9) % 12;
        const int doy = (153 * mp + 2) / 5 + day - 1;
        const int doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        const long long days = static_cast<long long>(era) * 146097 + doe - 719468;
        return days * 1440 + hour * 60 + minute;
    }

    static Timestamp from_epoch_minutes(long long m) {
        long long days = m >= 0 ? m / 1440 : (m - 1439) / 1440;
        const long long rem = m - days * 1440;
        days += 719468;
        const long long era = (days >= 0 ? days : days - 146096) / 146097;
        const long long doe = days - era * 146097;
        const long long yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const long long doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const long long mp = (5 * doy + 2) / 153;
        Timestamp t;
        t.day = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
        t.month = static_cast<int>(mp < 10 ? mp + 3 : mp - 9);
        t.year = static_cast<int>(yoe + era * 400 + (t.month <= 2 ? 1 : 0));
        t.hour = static_cast<int>(rem / 60);
        t.minute = static_cast<int>(rem % 60);
        return t;
    }

    Timestamp plus_steps(long long steps) const {
        return from_epoch_minutes(epoch_minutes() + steps * kStepMinutes);
    }

    std::string iso() const {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d", year, month, day, hour, minute);
        return buf;
    }

    // Accepts "YYYY-MM-DDTHH:MM", optionally with ":SS" (must be 00) and a
    // space instead of 'T'.
    static bool parse(std::string_view s, Timestamp& out) {
        auto num = [&](std::size_t pos, std::size_t len, int& v) {
            if (pos + len > s.size()) return false;
            auto r = std::from_chars(s.data() + pos, s.data() + pos + len, v);
            return r.ec == std::errc() && r.ptr == s.data() + pos + len;
        };
        if (s.size() < 16) return false;
        if (s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') || s[13] != ':') return false;
        Timestamp t;
        if (!num(0, 4, t.year) || !num(5, 2, t.month) || !num(8, 2, t.day) || !num(11, 2, t.hour) ||
            !num(14, 2, t.minute))
            return false;
        if (s.size() > 16) {
            int sec = 0;
            if (s.size() != 19 || s[16] != ':' || !num(17, 2, sec) || sec != 0) return false;
        }
        if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > 31 || t.hour > 23 || t.minute > 59) return false;
        if (from_epoch_minutes(t.epoch_minutes()).day != t.day) return false;   // e.g. Feb 30
        out = t;
        return true;
    }
};

struct QuarterHourSeries {
    Timestamp start{};
    int step_minutes = kStepMinutes;
    std::vector<double> values;
    Unit unit = Unit::kWh_el;

    QuarterHourSeries() = default;
    QuarterHourSeries(std::vector<double> v, Unit u, Timestamp s = {})
        : start(s), values(std::move(v)), unit(u) {}

    std::size_t size() const { return values.size(); }
    double operator[](std::size_t i) const { return values[i]; }
    double& operator[](std::size_t i) { return values[i]; }
    double sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }
    double mean() const { return values.empty() ? 0.0 : sum() / static_cast<double>(values.size()); }
    Timestamp time_at(std::size_t i) const { return start.plus_steps(static_cast<long long>(i)); }

    QuarterHourSeries slice(std::size_t offset, std::size_t length) const {
        if (offset + length > values.size()) throw DomainError("series slice out of range");
        QuarterHourSeries out;
        out.start = time_at(offset);
        out.unit = unit;
        out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(offset),
                          values.begin() + static_cast<std::ptrdiff_t>(offset + length));
        return out;
    }

    // Throws DataError on a broken invariant.
    void validate(bool annual = false) const {
        if (step_minutes != kStepMinutes) throw DataError("series step must be 15 minutes");
        if (values.empty()) throw DataError("series is empty");
        if (annual && values.size() != static_cast<std::size_t>(kStepsPerYear))
            throw DataError("annual series must have 35040 rows, got " + std::to_string(values.size()));
        if (!annual && values.size() % kStepsPerDay != 0 && values.size() != static_cast<std::size_t>(kStepsPerYear))
            throw DataError("window series length must be a multiple of 96");
        for (std::size_t i = 0; i < values.size(); ++i) {
            if (!std::isfinite(values[i])) throw DataError("non-finite value at row " + std::to_string(i + 1));
            if (!allows_negative(unit) && values[i] < 0.0)
                throw DataError("negative " + std::string(to_string(unit)) + " value at row " + std::to_string(i + 1));
        }
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r' || s[b] == '\n')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r' || s[e - 1] == '\n')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string format_double(double v) {
    char buf[64];
    auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

}  // namespace detail

// Reads a two-column CSV (header "timestamp,value"). `annual` demands exactly
// one non-leap year of rows.
inline QuarterHourSeries load_series(const std::string& path, Unit unit, bool annual = false) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open series file: " + path);
    std::string line;
    QuarterHourSeries s;
    s.unit = unit;
    long long prev = 0;
    bool have_prev = false;
    int lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (!header_seen) {
            header_seen = true;
            if (t != "timestamp,value") throw DataError(path + ": expected header 'timestamp,value'");
            continue;
        }
        const auto comma = t.find(',');
        if (comma == std::string::npos) throw DataError(path + ":" + std::to_string(lineno) + ": missing comma");
        Timestamp ts;
        if (!Timestamp::parse(detail::trim(std::string_view(t).substr(0, comma)), ts))
            throw DataError(path + ":" + std::to_string(lineno) + ": bad timestamp");
        const std::string vs = detail::trim(std::string_view(t).substr(comma + 1));
        double v = 0.0;
        auto r = std::from_chars(vs.data(), vs.data() + vs.size(), v);
        if (r.ec != std::errc() || r.ptr != vs.data() + vs.size())
            throw DataError(path + ":" + std::to_string(lineno) + ": bad value '" + vs + "'");
        const long long m = ts.epoch_minutes();
        if (!have_prev) {
            s.start = ts;
        } else if (m <= prev) {
            throw DataError(path + ":" + std::to_string(lineno) + ": non-monotone timestamp (cadence violation)");
        } else if (m - prev != kStepMinutes) {
            throw DataError(path + ":" + std::to_string(lineno) + ": cadence violation, gap of " +
                            std::to_string(m - prev) + " minutes");
        }
        prev = m;
        have_prev = true;
        s.values.push_back(v);
    }
    if (!header_seen) throw DataError(path + ": empty file");
    try {
        s.validate(annual);
    } catch (const DataError& e) {
        throw DataError(path + ": " + e.what());
    }
    return s;
}

inline void write_series(const std::string& path, const QuarterHourSeries& s) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write series file: " + path);
    out << "timestamp,value\n";
    long long m = s.start.epoch_minutes();
    for (double v : s.values) {
        out << Timestamp::from_epoch_minutes(m).iso() << ',' << detail::format_double(v) << '\n';
        m += kStepMinutes;
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace cesopt
