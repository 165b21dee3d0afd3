#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spcdist {

/// Closed observation window [lower, upper] shared by every subject.
struct Domain {
    double lower = 0.0;
    double upper = 1.0;

    double length() const { return upper - lower; }
    bool contains(double t) const { return t >= lower && t <= upper; }
    friend bool operator==(const Domain&, const Domain&) = default;
};

/// One irregularly sampled series. Invariants are not enforced on
/// construction; use validate() or parse_long_csv() for checked input.
struct Subject {
    std::string id;
    std::vector<double> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }
    friend bool operator==(const Subject&, const Subject&) = default;
};

struct Dataset {
    std::vector<Subject> subjects;
    Domain domain;

    std::size_t size() const { return subjects.size(); }
    friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Smallest number of retained observations a subject may carry.
inline constexpr std::size_t kMinObservations = 4;

/// Parses long-format CSV with header `subject,time,value`.
///
/// Rows may come in any order; rows with an empty value field are dropped.
/// Subjects are ordered by id (byte-wise) and each subject's rows by time, so
/// the result does not depend on row order. Lines starting with '#' are
/// ignored. When `domain` is absent it is set to the global min/max of the
/// observed times. Throws ValidationError on malformed rows, duplicate
/// (subject, time) pairs, subjects with fewer than kMinObservations rows
/// (all offending ids are listed), observations outside `domain`, or empty
/// input.
Dataset parse_long_csv(std::istream& in, std::optional<Domain> domain = std::nullopt);

/// Reads a file and forwards to parse_long_csv. Throws IoError if the file
/// cannot be opened.
Dataset read_long_csv(const std::string& path, std::optional<Domain> domain = std::nullopt);

/// Writes `subject,time,value` rows at 17 significant digits.
void write_long_csv(std::ostream& out, const Dataset& dataset);

/// Returns one message per violated invariant; empty when the dataset is
/// well formed.
std::vector<std::string> validate(const Dataset& dataset);

/// Index of the subject with this id, if any.
std::optional<std::size_t> find_subject(const Dataset& dataset, const std::string& id);

}  // namespace spcdist
