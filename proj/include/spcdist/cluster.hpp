#pragma once

#include <cstddef>
#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "spcdist/distance.hpp"

namespace spcdist {

/// Mean of the `k_neighbors` smallest off-diagonal entries of each row.
/// Requires size() > k_neighbors.
std::vector<double> knn_outlier_scores(const DissimilarityMatrix& matrix,
                                       std::size_t k_neighbors = 3);

struct ThresholdRule {
    double threshold = 0.0;
};

/// Sort scores ascending and look at consecutive ratios s[m+1]/s[m] for m in
/// the top quartile of positions; everything above the first ratio reaching
/// `min_ratio` is flagged. Nothing is flagged if no ratio qualifies.
struct GapRule {
    double min_ratio = 1.5;
};

using FlagRule = std::variant<ThresholdRule, GapRule>;

struct OutlierReport {
    std::vector<std::string> ids;
    std::vector<double> scores;
    std::vector<bool> flagged;
    /// Threshold mode: the threshold. Gap mode: the largest unflagged score
    /// (everything strictly above was flagged), or the maximum score when
    /// nothing was flagged.
    double threshold_used = 0.0;
    bool gap_mode = false;

    std::vector<std::string> flagged_ids() const;
};

OutlierReport flag_outliers(const std::vector<std::string>& ids, const std::vector<double>& scores,
                            const FlagRule& rule);

/// Parses "gap" or "threshold:<t>".
FlagRule parse_flag_rule(const std::string& text);

struct Clustering {
    std::vector<std::string> ids;
    std::vector<std::size_t> medoids;     // indices into ids, ascending
    std::vector<std::size_t> assignment;  // per subject: index of its medoid
    double total_cost = 0.0;
    std::vector<double> cost_trace;       // after BUILD, then after each swap

    std::vector<std::string> medoid_ids() const;
    /// 1-based cluster number of subject i (order of medoids).
    std::size_t cluster_of(std::size_t i) const;
};

/// k-medoids by BUILD then steepest-descent SWAP. When no single exchange
/// improves, the best simultaneous exchange of two medoids is tried as well,
/// provided one such scan stays under about 2e8 distance lookups.
/// Deterministic: ties go to the lowest subject index.
Clustering pam(const DissimilarityMatrix& matrix, std::size_t k);

/// Sum over subjects of the distance to the closest of `medoids`.
double medoid_cost(const DissimilarityMatrix& matrix, const std::vector<std::size_t>& medoids);

/// `subject,cluster,medoid`
void write_clustering_csv(std::ostream& out, const Clustering& clustering,
                          const std::vector<std::string>& comment_lines = {});
/// `subject,score,flagged`
void write_outlier_csv(std::ostream& out, const OutlierReport& report,
                       const std::vector<std::string>& comment_lines = {});

}  // namespace spcdist
