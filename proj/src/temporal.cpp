#include "tempeval/temporal.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace tempeval {

namespace {

constexpr std::array<std::pair<std::string_view, TemporalUnit>, 8> kUnitNames = {{
    {"years", TemporalUnit::Years},
    {"months", TemporalUnit::Months},
    {"days", TemporalUnit::Days},
    {"hours", TemporalUnit::Hours},
    {"minutes", TemporalUnit::Minutes},
    {"seconds", TemporalUnit::Seconds},
    {"date", TemporalUnit::Date},
    {"year-only", TemporalUnit::YearOnly},
}};

constexpr std::array<std::string_view, 12> kMonthNames = {
    "January", "February", "March",     "April",   "May",      "June",
    "July",    "August",   "September", "October", "November", "December"};

constexpr std::array<std::string_view, 12> kMonthAbbrev = {
    "Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

bool iequals(std::string_view a, std::string_view b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(a[i])) !=
            std::tolower(static_cast<unsigned char>(b[i])))
            return false;
    }
    return true;
}

int month_from_name(std::string_view name) {
    for (size_t i = 0; i < kMonthNames.size(); ++i) {
        if (iequals(name, kMonthNames[i]) || iequals(name, kMonthAbbrev[i]))
            return static_cast<int>(i) + 1;
    }
    return 0;
}

bool all_digits(std::string_view s) {
    return !s.empty() &&
           std::all_of(s.begin(), s.end(),
                       [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; });
}

// Strict numeric grammar: optional sign, digits with optional well-formed
// thousands grouping, optional decimal part. No exponents.
std::optional<double> parse_number(std::string_view raw) {
    std::string s = trim(raw);
    if (s.empty()) return std::nullopt;
    size_t pos = 0;
    bool negative = false;
    if (s[pos] == '+' || s[pos] == '-') {
        negative = s[pos] == '-';
        ++pos;
    }

    std::string intpart;
    size_t start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    intpart = s.substr(start, pos - start);
    if (pos < s.size() && s[pos] == ',') {
        // thousands grouping: 1-3 leading digits then ,ddd groups
        if (intpart.empty() || intpart.size() > 3) return std::nullopt;
        while (pos < s.size() && s[pos] == ',') {
            if (pos + 3 >= s.size()) return std::nullopt;
            std::string_view group = std::string_view(s).substr(pos + 1, 3);
            if (!all_digits(group)) return std::nullopt;
            intpart += group;
            pos += 4;
        }
    }
    if (intpart.empty()) return std::nullopt;

    std::string frac;
    if (pos < s.size() && s[pos] == '.') {
        ++pos;
        start = pos;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        frac = s.substr(start, pos - start);
        if (frac.empty()) return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;

    std::string plain = negative ? "-" + intpart : intpart;
    if (!frac.empty()) plain += "." + frac;
    double out = 0.0;
    auto res = std::from_chars(plain.data(), plain.data() + plain.size(), out);
    if (res.ec != std::errc() || res.ptr != plain.data() + plain.size()) return std::nullopt;
    if (!std::isfinite(out)) return std::nullopt;
    return out;
}

std::optional<int> parse_int_field(std::string_view s, size_t min_len, size_t max_len) {
    if (s.size() < min_len || s.size() > max_len || !all_digits(s)) return std::nullopt;
    int v = 0;
    for (char c : s) v = v * 10 + (c - '0');
    return v;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = s.find(sep, start);
        if (pos == std::string_view::npos) {
            out.emplace_back(s.substr(start));
            break;
        }
        out.emplace_back(s.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

ParseOutcome parse_calendar_date(std::string_view text, std::string_view pattern) {
    std::string s = trim(text);
    int y = 0, m = 0, d = 0;
    if (pattern == "%B %d, %Y") {
        // e.g. "February 18, 2004"
        size_t sp = s.find(' ');
        size_t comma = s.find(',');
        if (sp == std::string::npos || comma == std::string::npos || comma < sp)
            return ParseOutcome::failure("date does not match pattern %B %d, %Y");
        m = month_from_name(std::string_view(s).substr(0, sp));
        auto day = parse_int_field(trim(std::string_view(s).substr(sp + 1, comma - sp - 1)), 1, 2);
        auto year = parse_int_field(trim(std::string_view(s).substr(comma + 1)), 4, 4);
        if (m == 0 || !day || !year)
            return ParseOutcome::failure("date does not match pattern %B %d, %Y");
        d = *day;
        y = *year;
    } else if (pattern == "yyyy-MMM-dd") {
        // e.g. "2004-Feb-18"
        auto parts = split_on(s, '-');
        if (parts.size() != 3)
            return ParseOutcome::failure("date does not match pattern yyyy-MMM-dd");
        auto year = parse_int_field(parts[0], 4, 4);
        m = month_from_name(parts[1]);
        auto day = parse_int_field(parts[2], 1, 2);
        if (!year || m == 0 || !day)
            return ParseOutcome::failure("date does not match pattern yyyy-MMM-dd");
        y = *year;
        d = *day;
    } else {
        return ParseOutcome::failure("unknown date pattern");
    }
    if (!valid_civil_date(y, m, d)) return ParseOutcome::failure("invalid civil date");
    return ParseOutcome::success(CalendarDateValue{y, m, d});
}

ParseOutcome parse_clock(std::string_view text) {
    std::string s = trim(text);
    auto parts = split_on(s, ':');
    if (parts.size() != 2 && parts.size() != 3)
        return ParseOutcome::failure("clock value is not H:MM:SS or MM:SS");
    for (auto& p : parts)
        if (!all_digits(p)) return ParseOutcome::failure("non-numeric clock field");
    long hours = 0, minutes = 0, seconds = 0;
    if (parts.size() == 3) {
        auto hh = parse_int_field(parts[0], 1, 9);
        auto mm = parse_int_field(parts[1], 1, 2);
        auto ss = parse_int_field(parts[2], 1, 2);
        if (!hh) return ParseOutcome::failure("clock hours out of range");
        if (!mm || *mm > 59 || !ss || *ss > 59)
            return ParseOutcome::failure("clock minutes/seconds out of range");
        hours = *hh;
        minutes = *mm;
        seconds = *ss;
    } else {
        // MM:SS per the annotation rule; minutes may exceed 59
        auto mm = parse_int_field(parts[0], 1, 9);
        auto ss = parse_int_field(parts[1], 1, 2);
        if (!mm) return ParseOutcome::failure("clock minutes out of range");
        if (!ss || *ss > 59) return ParseOutcome::failure("clock seconds out of range");
        minutes = *mm;
        seconds = *ss;
    }
    double total = 3600.0 * static_cast<double>(hours) + 60.0 * static_cast<double>(minutes) +
                   static_cast<double>(seconds);
    return ParseOutcome::success(ClockDurationValue{total});
}

// Tolerant JSON reader: maps single-quoted strings to double-quoted ones so
// the pseudo-JSON some models print ({'X': 127, ...}) still parses.
std::string normalize_quotes(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_double = false;
    bool in_single = false;
    for (size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '\\' && i + 1 < s.size() && (in_double || in_single)) {
            out.push_back(c);
            out.push_back(s[++i]);
            continue;
        }
        if (c == '"' && !in_single) {
            in_double = !in_double;
            out.push_back(c);
        } else if (c == '\'' && !in_double) {
            in_single = !in_single;
            out.push_back('"');
        } else if (c == '"' && in_single) {
            out.push_back('\\');
            out.push_back('"');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

// First balanced {...} span, string-aware. Returns empty view when none.
std::string_view first_balanced_object(std::string_view s) {
    size_t start = s.find('{');
    if (start == std::string_view::npos) return {};
    int depth = 0;
    bool in_str = false;
    for (size_t i = start; i < s.size(); ++i) {
        char c = s[i];
        if (in_str) {
            if (c == '\\') ++i;
            else if (c == '"') in_str = false;
            continue;
        }
        if (c == '"') in_str = true;
        else if (c == '{') ++depth;
        else if (c == '}') {
            --depth;
            if (depth == 0) return s.substr(start, i - start + 1);
        }
    }
    return {};
}

std::optional<double> json_to_double(const nlohmann::json& v) {
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_number(v.get<std::string>());
    return std::nullopt;
}

ExtractResult extract_from_object_text(std::string_view object_text) {
    nlohmann::json obj = nlohmann::json::parse(normalize_quotes(object_text), nullptr, false);
    if (obj.is_discarded() || !obj.is_object())
        return ExtractResult::failure("unbalanced JSON");
    if (obj.contains("answer")) {
        const auto& v = obj["answer"];
        if (v.is_string()) return ExtractResult::text(v.get<std::string>());
        if (v.is_number_integer()) return ExtractResult::text(std::to_string(v.get<long long>()));
        if (v.is_number()) return ExtractResult::text(format_double(v.get<double>()));
        return ExtractResult::failure("answer value is not a scalar");
    }
    if (obj.contains("X") && obj.contains("Y") && obj.contains("Z")) {
        auto x = json_to_double(obj["X"]);
        auto y = json_to_double(obj["Y"]);
        auto z = json_to_double(obj["Z"]);
        if (x && y && z) return ExtractResult::triple({*x, *y, *z});
        return ExtractResult::failure("non-numeric X/Y/Z value");
    }
    return ExtractResult::failure("missing answer key");
}

} // namespace

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string_view to_string(TemporalUnit u) {
    for (const auto& [name, unit] : kUnitNames)
        if (unit == u) return name;
    return "?";
}

std::optional<TemporalUnit> unit_from_string(std::string_view s) {
    for (const auto& [name, unit] : kUnitNames)
        if (name == s) return unit;
    return std::nullopt;
}

std::optional<AnswerFormat> AnswerFormat::from_string(std::string_view s) {
    std::string t = trim(s);
    if (t.rfind("# ", 0) == 0) {
        auto unit = unit_from_string(std::string_view(t).substr(2));
        if (!unit || *unit == TemporalUnit::Date || *unit == TemporalUnit::YearOnly)
            return std::nullopt;
        return AnswerFormat{FormatKind::Count, *unit, {}};
    }
    if (t == "yyyy") return AnswerFormat{FormatKind::Year4, TemporalUnit::YearOnly, {}};
    if (t == "%B %d, %Y" || t == "yyyy-MMM-dd")
        return AnswerFormat{FormatKind::CalendarDate, TemporalUnit::Date, t};
    if (t == "HH:MM:SS") return AnswerFormat{FormatKind::ClockHms, TemporalUnit::Seconds, {}};
    if (t == "composite-xyz")
        return AnswerFormat{FormatKind::CompositeXyz, TemporalUnit::Seconds, {}};
    return std::nullopt;
}

std::string AnswerFormat::str() const {
    switch (kind) {
        case FormatKind::Count: return "# " + std::string(to_string(count_unit));
        case FormatKind::Year4: return "yyyy";
        case FormatKind::CalendarDate: return date_pattern;
        case FormatKind::ClockHms: return "HH:MM:SS";
        case FormatKind::CompositeXyz: return "composite-xyz";
    }
    return "?";
}

TemporalUnit AnswerFormat::implied_unit() const {
    switch (kind) {
        case FormatKind::Count: return count_unit;
        case FormatKind::Year4: return TemporalUnit::YearOnly;
        case FormatKind::CalendarDate: return TemporalUnit::Date;
        case FormatKind::ClockHms:
        case FormatKind::CompositeXyz: return TemporalUnit::Seconds;
    }
    return TemporalUnit::Seconds;
}

long days_from_civil(int year, int month, int day) {
    using namespace std::chrono;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                             std::chrono::day{unsigned(day)}};
    return static_cast<long>(sys_days{ymd}.time_since_epoch().count());
}

CalendarDateValue civil_from_days(long days) {
    using namespace std::chrono;
    const year_month_day ymd{sys_days{std::chrono::days{days}}};
    return CalendarDateValue{int(ymd.year()), int(unsigned(ymd.month())),
                             int(unsigned(ymd.day()))};
}

bool valid_civil_date(int year, int month, int day) {
    using namespace std::chrono;
    if (month < 1 || month > 12 || day < 1 || day > 31) return false;
    const year_month_day ymd{std::chrono::year{year}, std::chrono::month{unsigned(month)},
                             std::chrono::day{unsigned(day)}};
    return ymd.ok();
}

ParseOutcome parse_temporal(std::string_view text, const AnswerFormat& fmt) {
    std::string s = trim(text);
    if (s.empty()) return ParseOutcome::failure("empty answer");
    switch (fmt.kind) {
        case FormatKind::Count: {
            auto v = parse_number(s);
            if (!v) return ParseOutcome::failure("non-numeric count");
            return ParseOutcome::success(CountValue{*v, fmt.count_unit});
        }
        case FormatKind::Year4: {
            std::string_view body = s;
            if (!body.empty() && body.front() == '+') body.remove_prefix(1);
            auto y = parse_int_field(body, 4, 4);
            if (!y) return ParseOutcome::failure("not a 4-digit year");
            return ParseOutcome::success(YearValue{*y});
        }
        case FormatKind::CalendarDate: return parse_calendar_date(s, fmt.date_pattern);
        case FormatKind::ClockHms: return parse_clock(s);
        case FormatKind::CompositeXyz: {
            std::string_view obj = first_balanced_object(s);
            if (obj.empty()) return ParseOutcome::failure("no composite object found");
            auto got = extract_from_object_text(obj);
            if (!got.xyz) {
                return ParseOutcome::failure(got.reason.empty() ? "missing X/Y/Z keys"
                                                                : got.reason);
            }
            const auto& [x, y, z] = *got.xyz;
            if (x < 0 || y < 0 || z < 0)
                return ParseOutcome::failure("negative duration component");
            return ParseOutcome::success(composite_to_seconds(x, y, z));
        }
    }
    return ParseOutcome::failure("unknown format");
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string render_canonical(const TemporalValue& value, const AnswerFormat& fmt) {
    char buf[96];
    if (const auto* c = std::get_if<CountValue>(&value)) return format_double(c->magnitude);
    if (const auto* y = std::get_if<YearValue>(&value)) {
        std::snprintf(buf, sizeof(buf), "%04d", y->value);
        return buf;
    }
    if (const auto* d = std::get_if<CalendarDateValue>(&value)) {
        if (fmt.date_pattern == "yyyy-MMM-dd") {
            std::snprintf(buf, sizeof(buf), "%04d-%s-%02d", d->year,
                          std::string(kMonthAbbrev[size_t(d->month - 1)]).c_str(), d->day);
        } else {
            std::snprintf(buf, sizeof(buf), "%s %d, %04d",
                          std::string(kMonthNames[size_t(d->month - 1)]).c_str(), d->day, d->year);
        }
        return buf;
    }
    const auto& clock = std::get<ClockDurationValue>(value);
    double total = clock.total_seconds;
    long whole = static_cast<long>(total);
    long h = whole / 3600;
    long m = (whole % 3600) / 60;
    double sec = total - static_cast<double>(h * 3600 + m * 60);
    if (fmt.kind == FormatKind::CompositeXyz) {
        return "{\"X\": " + std::to_string(h) + ", \"Y\": " + std::to_string(m) +
               ", \"Z\": " + format_double(sec) + "}";
    }
    std::snprintf(buf, sizeof(buf), "%ld:%02ld:%02ld", h, m, static_cast<long>(sec));
    return buf;
}

NumericView numeric_view(const TemporalValue& value) {
    if (const auto* c = std::get_if<CountValue>(&value))
        return {c->magnitude, Measure::CountOf, c->unit};
    if (const auto* y = std::get_if<YearValue>(&value))
        return {static_cast<double>(y->value), Measure::YearNumber, TemporalUnit::YearOnly};
    if (const auto* d = std::get_if<CalendarDateValue>(&value))
        return {static_cast<double>(days_from_civil(d->year, d->month, d->day)),
                Measure::DaysSinceEpoch, TemporalUnit::Date};
    return {std::get<ClockDurationValue>(value).total_seconds, Measure::CountOf,
            TemporalUnit::Seconds};
}

ClockDurationValue composite_to_seconds(double hours, double minutes, double seconds) {
    if (hours < 0 || minutes < 0 || seconds < 0)
        throw std::invalid_argument("negative duration component");
    return ClockDurationValue{3600.0 * hours + 60.0 * minutes + seconds};
}

ExtractResult extract_final_answer(std::string_view response) {
    static constexpr std::string_view kMarker = "Final Answer:";
    size_t pos = response.rfind(kMarker);
    if (pos == std::string_view::npos)
        return ExtractResult::failure("missing Final Answer marker");
    std::string_view rest = response.substr(pos + kMarker.size());
    size_t eol = rest.find('\n');
    if (eol != std::string_view::npos) rest = rest.substr(0, eol);
    std::string line = trim(rest);
    while (!line.empty()) {
        char back = line.back();
        if (back == '.' || back == '!' || back == '?' || back == ',' || back == ';' ||
            back == ':') {
            line.pop_back();
            while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())))
                line.pop_back();
        } else {
            break;
        }
    }
    if (line.empty()) return ExtractResult::failure("empty text after Final Answer marker");
    return ExtractResult::text(std::move(line));
}

ExtractResult extract_json_answer(std::string_view response, std::string_view prefill) {
    ExtractResult direct = ExtractResult::failure("unbalanced JSON");
    std::string_view obj = first_balanced_object(response);
    if (!obj.empty()) {
        direct = extract_from_object_text(obj);
        if (direct.ok()) return direct;
    }
    if (!prefill.empty()) {
        std::string joined = std::string(prefill) + std::string(response);
        std::string_view obj2 = first_balanced_object(joined);
        if (!obj2.empty()) return extract_from_object_text(obj2);
        return ExtractResult::failure("unbalanced JSON");
    }
    return direct;
}

} // namespace tempeval
