#include "spcdist/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "spcdist/error.hpp"
#include "spcdist/format.hpp"

namespace spcdist {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

struct Row {
    double time;
    double value;
    std::size_t line;
};

}  // namespace

Dataset parse_long_csv(std::istream& in, std::optional<Domain> domain) {
    if (domain && !(domain->lower < domain->upper))
        throw ValidationError("domain lower bound must be below upper bound");

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    std::map<std::string, std::vector<Row>> rows;

    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = trim(line);
        if (line_no == 1 && view.starts_with("\xEF\xBB\xBF")) view.remove_prefix(3);
        if (view.empty() || view.front() == '#') continue;
        auto fields = split_fields(view);
        if (!have_header) {
            if (fields.size() != 3 || trim(fields[0]) != "subject" || trim(fields[1]) != "time" ||
                trim(fields[2]) != "value")
                throw ValidationError("line " + std::to_string(line_no) +
                                      ": expected header 'subject,time,value'");
            have_header = true;
            continue;
        }
        if (fields.size() != 3)
            throw ValidationError("line " + std::to_string(line_no) + ": expected 3 fields, got " +
                                  std::to_string(fields.size()));
        std::string id(trim(fields[0]));
        if (id.empty()) throw ValidationError("line " + std::to_string(line_no) + ": empty subject id");
        auto time = parse_real(fields[1]);
        if (!time)
            throw ValidationError("line " + std::to_string(line_no) + ": non-numeric time '" +
                                  std::string(trim(fields[1])) + "'");
        auto& bucket = rows[id];
        if (trim(fields[2]).empty()) {
            // Missing measurement: keep the subject known but drop the row.
            continue;
        }
        auto value = parse_real(fields[2]);
        if (!value)
            throw ValidationError("line " + std::to_string(line_no) + ": non-numeric value '" +
                                  std::string(trim(fields[2])) + "'");
        bucket.push_back({*time, *value, line_no});
    }

    if (!have_header) throw ValidationError("empty input: no header row");
    if (rows.empty()) throw ValidationError("empty input: no data rows");

    Dataset dataset;
    std::vector<std::string> short_subjects;
    double t_min = std::numeric_limits<double>::infinity();
    double t_max = -std::numeric_limits<double>::infinity();

    for (auto& [id, bucket] : rows) {
        std::sort(bucket.begin(), bucket.end(), [](const Row& a, const Row& b) {
            return a.time < b.time || (a.time == b.time && a.value < b.value);
        });
        for (std::size_t k = 1; k < bucket.size(); ++k) {
            if (bucket[k].time == bucket[k - 1].time)
                throw ValidationError("subject " + id + ": duplicate time " +
                                      format_real(bucket[k].time));
        }
        if (bucket.size() < kMinObservations) {
            short_subjects.push_back(id);
            continue;
        }
        Subject subject;
        subject.id = id;
        subject.times.reserve(bucket.size());
        subject.values.reserve(bucket.size());
        for (const auto& row : bucket) {
            subject.times.push_back(row.time);
            subject.values.push_back(row.value);
        }
        t_min = std::min(t_min, subject.times.front());
        t_max = std::max(t_max, subject.times.back());
        dataset.subjects.push_back(std::move(subject));
    }

    if (!short_subjects.empty()) {
        std::string msg = "subjects with fewer than " + std::to_string(kMinObservations) +
                          " non-missing observations:";
        for (const auto& id : short_subjects) msg += " " + id;
        throw ValidationError(msg);
    }

    if (domain) {
        for (const auto& s : dataset.subjects) {
            if (s.times.front() < domain->lower || s.times.back() > domain->upper)
                throw ValidationError("subject " + s.id + ": observation times outside domain [" +
                                      format_real(domain->lower) + ", " +
                                      format_real(domain->upper) + "]");
        }
        dataset.domain = *domain;
    } else {
        dataset.domain = Domain{t_min, t_max};
    }
    return dataset;
}

Dataset read_long_csv(const std::string& path, std::optional<Domain> domain) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_long_csv(in, domain);
}

void write_long_csv(std::ostream& out, const Dataset& dataset) {
    out << "subject,time,value\n";
    for (const auto& s : dataset.subjects) {
        for (std::size_t k = 0; k < s.times.size(); ++k)
            out << s.id << ',' << format_real(s.times[k]) << ',' << format_real(s.values[k]) << '\n';
    }
}

std::vector<std::string> validate(const Dataset& dataset) {
    std::vector<std::string> problems;
    const Domain& dom = dataset.domain;
    if (!(dom.lower < dom.upper))
        problems.push_back("domain: lower bound " + format_real(dom.lower) +
                           " is not below upper bound " + format_real(dom.upper));

    std::map<std::string, std::size_t> seen;
    for (const auto& s : dataset.subjects) {
        if (++seen[s.id] == 2) problems.push_back("subject " + s.id + ": duplicate id");
        if (s.times.size() != s.values.size()) {
            problems.push_back("subject " + s.id + ": " + std::to_string(s.times.size()) +
                               " times but " + std::to_string(s.values.size()) + " values");
        }
        if (s.times.size() < kMinObservations)
            problems.push_back("subject " + s.id + ": only " + std::to_string(s.times.size()) +
                               " observations, need at least " + std::to_string(kMinObservations));
        for (std::size_t k = 1; k < s.times.size(); ++k) {
            if (!(s.times[k - 1] < s.times[k])) {
                problems.push_back("subject " + s.id + ": times not strictly increasing at position " +
                                   std::to_string(k));
                break;
            }
        }
        bool outside = std::any_of(s.times.begin(), s.times.end(),
                                   [&](double t) { return !dom.contains(t); });
        if (outside)
            problems.push_back("subject " + s.id + ": observation times outside domain [" +
                               format_real(dom.lower) + ", " + format_real(dom.upper) + "]");
        bool nonfinite = std::any_of(s.values.begin(), s.values.end(),
                                     [](double v) { return !std::isfinite(v); });
        if (nonfinite) problems.push_back("subject " + s.id + ": non-finite value");
    }
    return problems;
}

std::optional<std::size_t> find_subject(const Dataset& dataset, const std::string& id) {
    for (std::size_t i = 0; i < dataset.subjects.size(); ++i)
        if (dataset.subjects[i].id == id) return i;
    return std::nullopt;
}

}  // namespace spcdist
