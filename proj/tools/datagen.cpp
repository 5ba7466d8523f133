// Regenerates data/tempanswerqa.jsonl: the bundled TempAnswerQA distribution
// with its published per-unit counts (ToT: 411 seconds, 328 dates, 229 years,
// 100 days, 50 months, 38 minutes, 541 hours; TTQA: 1194 years, 305 bare
// years, 94 days, 85 months, 59 dates) over the four splits
// (1016 arithmetic / 681 semantic / 1103 head / 634 tail, 3434 total).
// Fully deterministic: fixed seed, engine-level draws only.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tempeval/temporal.hpp"

using nlohmann::json;
using namespace tempeval;

namespace {

struct Rng {
    std::mt19937_64 eng{0x7e3a11u};
    long uniform(long lo, long hi) { // inclusive
        return lo + long(eng() % (unsigned long)(hi - lo + 1));
    }
    long peaked(long lo, long hi) { // triangular-ish, peak at the middle
        return (uniform(lo, hi) + uniform(lo, hi)) / 2;
    }
    template <typename T>
    const T& pick(const std::vector<T>& pool) {
        return pool[size_t(eng() % pool.size())];
    }
};

const std::vector<std::string> kPeople = {
    "Mara Ellingsen",  "Tobias Reinholt", "Priya Natarajan", "Janek Kowalczyk",
    "Aiko Morimoto",   "Dana Whitfield",  "Luca Ferraro",    "Noor Haddad",
    "Elin Sjoberg",    "Marcus Oduya",    "Greta Lindqvist", "Ravi Menon",
    "Sofia Almeida",   "Henrik Dalgaard", "Yuki Tanabe",     "Omar Rashidi",
    "Clara Vesely",    "Emil Brandstrup", "Ines Delacroix",  "Viktor Malinov",
    "Leila Osmani",    "Jonas Heikkinen", "Amara Diallo",    "Petra Novotna"};

const std::vector<std::string> kOccupations = {
    "footballer", "handball player", "novelist",   "violinist", "sprinter",
    "architect",  "chess player",    "swimmer",    "actress",   "sculptor",
    "cyclist",    "playwright",      "ski jumper", "painter"};

const std::vector<std::string> kClubs = {
    "Rosenborg",    "Dynamo Prague", "Atletico Verde", "FC Nordkap",  "Sparta Ost",
    "Union Lille",  "Real Monte",    "Viking Stavern", "Ajax Zuid",   "Inter Alba"};

const std::vector<std::string> kCities = {
    "Oslo",   "Lisbon", "Kyoto",  "Riga",    "Porto",  "Geneva",
    "Tallinn", "Lyon",   "Bergen", "Cordoba", "Leipzig", "Malmo"};

const std::vector<std::string> kTasks = {
    "bake 2 cakes",      "assemble a bookshelf", "knit one scarf",   "wash 4 windows",
    "edit a podcast",    "chart a reef dive",    "press 30 apples",  "tune two pianos"};

const std::vector<std::string> kEvents = {"E1", "E2", "E3", "E4", "E5", "E6", "E7", "E8"};

const char* kMonthName[] = {"January", "February", "March",     "April",   "May",      "June",
                            "July",    "August",   "September", "October", "November", "December"};
const char* kMonthAbbr[] = {"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};

std::string json_instruction(const std::string& key) {
    return "Return your answer as a JSON like: JSON = {\"explanation\": <your step by step "
           "solution>, \"answer\": <" + key + ">}";
}

std::string render_hms(long total) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%ld:%02ld:%02ld", total / 3600, (total % 3600) / 60,
                  total % 60);
    return buf;
}

std::string ttqa_table(Rng& rng, const std::string& person, const std::string& occupation) {
    const long born = rng.peaked(1900, 1995);
    const long debut = born + rng.uniform(16, 24);
    std::string table = person + "\t" + occupation + "\nBorn\t" +
                        kMonthName[rng.uniform(0, 11)] + " " +
                        std::to_string(rng.uniform(1, 28)) + ", " + std::to_string(born) +
                        "\nDebut year\t" + std::to_string(debut) + "\nPlace of birth\t" +
                        rng.pick(kCities);
    return table;
}

std::string tot_graph(Rng& rng) {
    std::string graph;
    for (int i = 0; i < 5; ++i) {
        graph += "Event " + rng.pick(kEvents) + " starts " +
                 std::to_string(rng.uniform(1, 9)) + " years before event " +
                 rng.pick(kEvents) + " ends. ";
    }
    return graph;
}

struct Writer {
    std::ofstream os;
    int written = 0;
    std::map<std::string, int> seq; // per-split counters

    explicit Writer(const std::string& path) : os(path, std::ios::binary) {
        if (!os) {
            std::fprintf(stderr, "cannot open %s\n", path.c_str());
            std::exit(1);
        }
    }

    void emit(const std::string& dataset, const std::string& split, const std::string& question,
              const std::string& context, const std::string& answer, const std::string& unit,
              const std::string& format) {
        const std::string prefix = dataset == "ToT" ? "tot" : "ttqa";
        char idbuf[64];
        std::snprintf(idbuf, sizeof(idbuf), "%s-%s-%06d", prefix.c_str(), split.c_str(),
                      ++seq[split]);
        json row;
        row["id"] = idbuf;
        row["dataset"] = dataset;
        row["split"] = split;
        row["question"] = question;
        if (context.empty()) row["context"] = nullptr;
        else row["context"] = context;
        row["answer"] = answer;
        row["unit"] = unit;
        row["format"] = format;
        os << row.dump() << "\n";
        ++written;
    }
};

void tot_arithmetic(Writer& w, Rng& rng) {
    // hours: 380 = 2 worked examples + 378 generated
    w.emit("ToT", "arithmetic",
           "How many hours before an anaesthesia with Halothane should you stop taking "
           "Levodopa? " + json_instruction("num_hours"),
           "", "8", "hours", "# hours");
    w.emit("ToT", "arithmetic",
           "What is the absolute time difference between Andi and Lee in hours given Andi is "
           "in EST(-0500) and Lee is in PST(-0800)? " + json_instruction("num_hours"),
           "", "3", "hours", "# hours");
    for (int i = 0; i < 378; ++i) {
        long hours;
        std::string question;
        if (i % 3 == 0) {
            hours = rng.uniform(0, 26);
            question = "What is the absolute time difference in hours between " +
                       rng.pick(kCities) + " (UTC+" + std::to_string(rng.uniform(0, 12)) +
                       ") and " + rng.pick(kCities) + " when the offsets differ by " +
                       std::to_string(hours) + " hours? ";
        } else {
            hours = rng.peaked(1, 48);
            question = "A freight train leaves " + rng.pick(kCities) + " and arrives " +
                       std::to_string(hours) + " hours later. How many hours was it en route? ";
        }
        w.emit("ToT", "arithmetic", question + json_instruction("num_hours"), "",
               std::to_string(hours), "hours", "# hours");
    }

    // seconds: 411 = 161 counts + 200 clock + 50 composite (one worked example)
    for (int i = 0; i < 161; ++i) {
        const long seconds = rng.peaked(600, 14400);
        w.emit("ToT", "arithmetic",
               "A kiln program runs for " + std::to_string(seconds) +
                   " seconds. How many seconds does one full program take? " +
                   json_instruction("num_seconds"),
               "", std::to_string(seconds), "seconds", "# seconds");
    }
    for (int i = 0; i < 200; ++i) {
        const long seconds = rng.peaked(600, 14400);
        w.emit("ToT", "arithmetic",
               "A recital starts at noon and ends " + std::to_string(seconds) +
                   " seconds later. Express the elapsed time as HH:MM:SS. " +
                   json_instruction("duration"),
               "", render_hms(seconds), "seconds", "HH:MM:SS");
    }
    w.emit("ToT", "arithmetic",
           "It takes Sophia an average of 16 minutes and 46 seconds to bake 2 cakes. If she "
           "wants to bake 15 cakes at the same rate, it will take her X hours, Y minutes, and "
           "Z seconds. Report the values of X, Y and Z as a json of the form "
           "{\"explanation\": <your step by step solution>, \"X\": X, \"Y\": Y, \"Z\": Z}.",
           "", "{'X': 2.0, 'Y': 5.0, 'Z': 45.0}", "seconds", "composite-xyz");
    for (int i = 0; i < 49; ++i) {
        const long total = rng.peaked(600, 14400);
        const long x = total / 3600, y = (total % 3600) / 60, z = total % 60;
        w.emit("ToT", "arithmetic",
               "It takes a workshop crew " + std::to_string(rng.uniform(9, 40)) +
                   " minutes to " + rng.pick(kTasks) + ". Working at the same rate for " +
                   std::to_string(rng.uniform(3, 20)) +
                   " batches, it will take X hours, Y minutes, and Z seconds in total, where "
                   "the total is " + std::to_string(total) +
                   " seconds. Report the values of X, Y and Z as a json of the form "
                   "{\"explanation\": <your step by step solution>, \"X\": X, \"Y\": Y, "
                   "\"Z\": Z}.",
               "",
               "{'X': " + std::to_string(x) + ".0, 'Y': " + std::to_string(y) +
                   ".0, 'Z': " + std::to_string(z) + ".0}",
               "seconds", "composite-xyz");
    }

    // minutes: 38
    for (int i = 0; i < 38; ++i) {
        const long minutes = rng.peaked(5, 120);
        w.emit("ToT", "arithmetic",
               "A ferry crossing takes " + std::to_string(minutes) +
                   " minutes. How many minutes does a single crossing take? " +
                   json_instruction("num_minutes"),
               "", std::to_string(minutes), "minutes", "# minutes");
    }

    // days: 63 = 2 worked examples + 61 generated
    w.emit("ToT", "arithmetic",
           "How many days did Ingenuity take to reach Mars? " + json_instruction("num_days"),
           "", "418", "days", "# days");
    w.emit("ToT", "arithmetic",
           "Natalie and Chris were born on 2004-Feb-18 and 2004-Dec-30 respectively. When "
           "Chris was 991 days old, how old was Natalie in days? " +
               json_instruction("num_days"),
           "", "1307", "days", "# days");
    for (int i = 0; i < 61; ++i) {
        const long days = rng.peaked(30, 500);
        w.emit("ToT", "arithmetic",
               "A cargo ship spends " + std::to_string(days) +
                   " days at sea before returning to " + rng.pick(kCities) +
                   ". How many days was the voyage? " + json_instruction("num_days"),
               "", std::to_string(days), "days", "# days");
    }

    // years: 124, bimodal on purpose (62 ages, 62 calendar-year magnitudes)
    for (int i = 0; i < 62; ++i) {
        const long age = rng.peaked(20, 89);
        w.emit("ToT", "arithmetic",
               rng.pick(kPeople) + " was born " + std::to_string(age) +
                   " years before the reference date. How many years old is that? " +
                   json_instruction("num_years"),
               "", std::to_string(age), "years", "# years");
    }
    for (int i = 0; i < 62; ++i) {
        const long year = rng.peaked(1950, 2013);
        w.emit("ToT", "arithmetic",
               "An archive stamp reads year " + std::to_string(year) +
                   ". How many years does the stamp state? " + json_instruction("num_years"),
               "", std::to_string(year), "years", "# years");
    }
}

void tot_semantic(Writer& w, Rng& rng) {
    // dates: 328
    for (int i = 0; i < 328; ++i) {
        const long y = rng.peaked(1950, 2014);
        const long m = rng.uniform(1, 12);
        const long d = rng.uniform(1, 28);
        char answer[32];
        std::snprintf(answer, sizeof(answer), "%04ld-%s-%02ld", y, kMonthAbbr[m - 1], d);
        w.emit("ToT", "semantic",
               "Given the event graph, on which date does event " + rng.pick(kEvents) +
                   " start? " + json_instruction("date"),
               tot_graph(rng), answer, "date", "yyyy-MMM-dd");
    }
    // hours: 161
    for (int i = 0; i < 161; ++i) {
        const long hours = rng.peaked(1, 48);
        w.emit("ToT", "semantic",
               "Given the event graph, how many hours pass between the start of " +
                   rng.pick(kEvents) + " and the end of " + rng.pick(kEvents) + "? " +
                   json_instruction("num_hours"),
               tot_graph(rng), std::to_string(hours), "hours", "# hours");
    }
    // years: 105, centered in the eighties
    for (int i = 0; i < 105; ++i) {
        const long years = rng.peaked(1975, 1994);
        w.emit("ToT", "semantic",
               "Given the event graph, in which year number does event " + rng.pick(kEvents) +
                   " end? " + json_instruction("num_years"),
               tot_graph(rng), std::to_string(years), "years", "# years");
    }
    // months: 50
    for (int i = 0; i < 50; ++i) {
        const long months = rng.peaked(1, 24);
        w.emit("ToT", "semantic",
               "Given the event graph, how many months does event " + rng.pick(kEvents) +
                   " last? " + json_instruction("num_months"),
               tot_graph(rng), std::to_string(months), "months", "# months");
    }
    // days: 37
    for (int i = 0; i < 37; ++i) {
        const long days = rng.peaked(1, 60);
        w.emit("ToT", "semantic",
               "Given the event graph, how many days separate " + rng.pick(kEvents) + " and " +
                   rng.pick(kEvents) + "? " + json_instruction("num_days"),
               tot_graph(rng), std::to_string(days), "days", "# days");
    }
}

void ttqa_split(Writer& w, Rng& rng, const std::string& split, int n_years, int n_yyyy,
                int n_days, int n_months, int n_dates, bool with_examples) {
    if (with_examples) {
        w.emit("TTQA", split,
               "How many years did Art Carney work as an actor starting from 1939?",
               "Art Carney\tActor\nBorn\tNovember 4, 1918\nYears active\t1939 to 1993\nSpouse\t"
               "Jean Myers",
               "54", "years", "# years");
        w.emit("TTQA", split,
               "How old was Arntzen when she began to play for her first senior club?",
               "Emilie Arntzen\tHandball player\nBorn\tNovember 2, 1994\nFirst senior club "
               "season\t2011\nPosition\tBack",
               "16", "years", "# years");
        n_years -= 2;
        w.emit("TTQA", split, "In which year did Jenson Button win his first championship?",
               "Jenson Button\tRacing driver\nBorn\tJanuary 19, 1980\nFirst championship\t"
               "2009\nTeam\tBrawn GP",
               "2009", "year-only", "yyyy");
        n_yyyy -= 1;
    }
    for (int i = 0; i < n_years; ++i) {
        const long years = rng.peaked(1, 80);
        const auto& person = rng.pick(kPeople);
        const auto& occupation = rng.pick(kOccupations);
        w.emit("TTQA", split,
               "How many years did " + person + " spend as a " + occupation + " at " +
                   rng.pick(kClubs) + "?",
               ttqa_table(rng, person, occupation), std::to_string(years), "years", "# years");
    }
    for (int i = 0; i < n_yyyy; ++i) {
        const long year = rng.peaked(1900, 2022);
        const auto& person = rng.pick(kPeople);
        w.emit("TTQA", split, "In which year did " + person + " make their professional debut?",
               ttqa_table(rng, person, rng.pick(kOccupations)), std::to_string(year),
               "year-only", "yyyy");
    }
    for (int i = 0; i < n_days; ++i) {
        const long days = rng.peaked(1, 365);
        const auto& person = rng.pick(kPeople);
        w.emit("TTQA", split,
               "For how many days did " + person + "'s record stand before it was broken?",
               ttqa_table(rng, person, rng.pick(kOccupations)), std::to_string(days), "days",
               "# days");
    }
    for (int i = 0; i < n_months; ++i) {
        const long months = rng.peaked(1, 36);
        const auto& person = rng.pick(kPeople);
        w.emit("TTQA", split,
               "How many months did " + person + " captain " + rng.pick(kClubs) + "?",
               ttqa_table(rng, person, rng.pick(kOccupations)), std::to_string(months),
               "months", "# months");
    }
    for (int i = 0; i < n_dates; ++i) {
        const long y = rng.peaked(1900, 2020);
        const long m = rng.uniform(1, 12);
        const long d = rng.uniform(1, 28);
        const auto& person = rng.pick(kPeople);
        std::string answer = std::string(kMonthName[m - 1]) + " " + std::to_string(d) + ", " +
                             std::to_string(y);
        w.emit("TTQA", split, "On what date was " + person + " born?",
               ttqa_table(rng, person, rng.pick(kOccupations)), answer, "date", "%B %d, %Y");
    }
}

} // namespace

int main(int argc, char** argv) {
    const std::string out = argc > 1 ? argv[1] : "data/tempanswerqa.jsonl";
    Writer writer(out);
    Rng rng;
    tot_arithmetic(writer, rng);
    tot_semantic(writer, rng);
    ttqa_split(writer, rng, "head", 766, 196, 60, 55, 26, /*with_examples=*/true);
    ttqa_split(writer, rng, "tail", 428, 109, 34, 30, 33, /*with_examples=*/false);
    std::cout << "wrote " << writer.written << " items to " << out << "\n";
    return 0;
}
