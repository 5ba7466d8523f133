#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace tempeval {

// The eight annotated answer units. Durations are counted in one of the six
// measures; "date" means a full calendar date, "year-only" a bare yyyy year.
enum class TemporalUnit { Years, Months, Days, Hours, Minutes, Seconds, Date, YearOnly };

std::string_view to_string(TemporalUnit u);
std::optional<TemporalUnit> unit_from_string(std::string_view s);

enum class FormatKind { Count, Year4, CalendarDate, ClockHms, CompositeXyz };

// Closed answer-format vocabulary. The serialized names follow the dataset's
// format column: "# years" .. "# seconds", "yyyy", a date pattern
// ("%B %d, %Y" or "yyyy-MMM-dd"), "HH:MM:SS", "composite-xyz".
struct AnswerFormat {
    FormatKind kind = FormatKind::Count;
    TemporalUnit count_unit = TemporalUnit::Years; // kind == Count
    std::string date_pattern;                      // kind == CalendarDate

    static std::optional<AnswerFormat> from_string(std::string_view s);
    std::string str() const;

    // The unit this format implies; clock and composite answers resolve to
    // seconds (the highest resolution they contain).
    TemporalUnit implied_unit() const;

    bool operator==(const AnswerFormat&) const = default;
};

struct CountValue {
    double magnitude = 0.0;
    TemporalUnit unit = TemporalUnit::Years;
    bool operator==(const CountValue&) const = default;
};

struct YearValue {
    int value = 0;
    bool operator==(const YearValue&) const = default;
};

struct CalendarDateValue {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // valid civil day
    bool operator==(const CalendarDateValue&) const = default;
};

struct ClockDurationValue {
    double total_seconds = 0.0;
    bool operator==(const ClockDurationValue&) const = default;
};

using TemporalValue = std::variant<CountValue, YearValue, CalendarDateValue, ClockDurationValue>;

// Total parse result: either a value or a non-empty reason.
struct ParseOutcome {
    std::optional<TemporalValue> value;
    std::string reason;

    bool parsed() const { return value.has_value(); }
    static ParseOutcome success(TemporalValue v) { return {std::move(v), {}}; }
    static ParseOutcome failure(std::string why) { return {std::nullopt, std::move(why)}; }
};

enum class Measure { CountOf, YearNumber, DaysSinceEpoch };

// Single numeric view of a temporal value. Views are comparable only when
// their measures (and count units) agree.
struct NumericView {
    double magnitude = 0.0;
    Measure measure = Measure::CountOf;
    TemporalUnit unit = TemporalUnit::Seconds; // meaningful for CountOf

    bool comparable_with(const NumericView& other) const {
        if (measure != other.measure) return false;
        return measure != Measure::CountOf || unit == other.unit;
    }
};

// Days between 1970-01-01 and the given proleptic-Gregorian date.
long days_from_civil(int year, int month, int day);
CalendarDateValue civil_from_days(long days);
bool valid_civil_date(int year, int month, int day);

// Parses an answer string under the given format. Tolerates surrounding
// whitespace, thousands separators, and a leading '+'; everything else is
// Unparsable. Never throws.
ParseOutcome parse_temporal(std::string_view text, const AnswerFormat& fmt);

// Canonical string for a parsed value under its format; re-parsing the
// result yields an equal value.
std::string render_canonical(const TemporalValue& value, const AnswerFormat& fmt);

NumericView numeric_view(const TemporalValue& value);

// total_seconds = 3600 x + 60 y + z. Throws std::invalid_argument on a
// negative component.
ClockDurationValue composite_to_seconds(double hours, double minutes, double seconds);

// Result of pulling an answer out of a raw model response: a scalar answer
// string, an (X, Y, Z) composite triple, or a failure reason.
struct ExtractResult {
    std::optional<std::string> answer;
    std::optional<std::array<double, 3>> xyz;
    std::string reason;

    bool ok() const { return answer.has_value() || xyz.has_value(); }
    static ExtractResult text(std::string t) { return {std::move(t), std::nullopt, {}}; }
    static ExtractResult triple(std::array<double, 3> v) { return {std::nullopt, v, {}}; }
    static ExtractResult failure(std::string why) { return {std::nullopt, std::nullopt, std::move(why)}; }
};

// Text after the last "Final Answer:" marker, first line only, trailing
// punctuation stripped.
ExtractResult extract_final_answer(std::string_view response);

// Reconstructs a JSON object (prepending `prefill` if the response alone has
// no balanced object), then returns the "answer" value or the {X, Y, Z}
// triple. Accepts the single-quoted pseudo-JSON some models emit.
ExtractResult extract_json_answer(std::string_view response, std::string_view prefill = {});

// Shortest decimal rendering that round-trips the double.
std::string format_double(double v);

std::string trim(std::string_view s);

} // namespace tempeval
