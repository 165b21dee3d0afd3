#include "spcdist/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include "spcdist/error.hpp"
#include "spcdist/format.hpp"

namespace spcdist {

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& lines) {
    for (const auto& line : lines) out << (line.starts_with("#") ? "" : "# ") << line << '\n';
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

std::vector<double> knn_outlier_scores(const DissimilarityMatrix& matrix, std::size_t k_neighbors) {
    const std::size_t n = matrix.size();
    if (k_neighbors == 0) throw ValidationError("k_neighbors must be positive");
    if (n <= k_neighbors)
        throw ValidationError("need more than " + std::to_string(k_neighbors) + " subjects, got " +
                              std::to_string(n));
    std::vector<double> scores(n);
    std::vector<double> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row.push_back(matrix(i, j));
        std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k_neighbors), row.end());
        double sum = 0.0;
        for (std::size_t q = 0; q < k_neighbors; ++q) sum += row[q];
        scores[i] = sum / static_cast<double>(k_neighbors);
    }
    return scores;
}

std::vector<std::string> OutlierReport::flagged_ids() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (flagged[i]) out.push_back(ids[i]);
    return out;
}

OutlierReport flag_outliers(const std::vector<std::string>& ids, const std::vector<double>& scores,
                            const FlagRule& rule) {
    if (ids.size() != scores.size()) throw ValidationError("one score per id required");
    const std::size_t n = scores.size();
    OutlierReport report;
    report.ids = ids;
    report.scores = scores;
    report.flagged.assign(n, false);

    if (const auto* t = std::get_if<ThresholdRule>(&rule)) {
        if (!(t->threshold > 0.0)) throw ValidationError("outlier threshold must be positive");
        report.threshold_used = t->threshold;
        for (std::size_t i = 0; i < n; ++i) report.flagged[i] = scores[i] > t->threshold;
        return report;
    }

    const auto& gap = std::get<GapRule>(rule);
    if (n < 3) throw ValidationError("gap mode needs at least 3 subjects");
    if (!(gap.min_ratio > 1.0)) throw ValidationError("gap ratio must exceed 1");
    report.gap_mode = true;

    std::vector<double> sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    report.threshold_used = sorted.back();
    // 1-based positions m in [floor(3n/4), n-1] compare sorted[m] to sorted[m-1].
    const std::size_t first = std::max<std::size_t>(1, (3 * n) / 4);
    for (std::size_t m = first; m <= n - 1; ++m) {
        const double lower = sorted[m - 1];
        const double upper = sorted[m];
        const bool jump = lower > 0.0 ? upper / lower >= gap.min_ratio : upper > 0.0;
        if (jump) {
            report.threshold_used = lower;
            for (std::size_t i = 0; i < n; ++i) report.flagged[i] = scores[i] > lower;
            break;
        }
    }
    return report;
}

FlagRule parse_flag_rule(const std::string& text) {
    if (text == "gap") return GapRule{};
    const std::string prefix = "threshold:";
    if (text.starts_with(prefix)) {
        auto v = parse_real(std::string_view(text).substr(prefix.size()));
        if (!v || !(*v > 0.0)) throw ValidationError("threshold must be a positive number: " + text);
        return ThresholdRule{*v};
    }
    throw ValidationError("mode must be 'gap' or 'threshold:<t>', got '" + text + "'");
}

double medoid_cost(const DissimilarityMatrix& matrix, const std::vector<std::size_t>& medoids) {
    double cost = 0.0;
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        double best = kInf;
        for (auto m : medoids) best = std::min(best, matrix(i, m));
        cost += best;
    }
    return cost;
}

std::vector<std::string> Clustering::medoid_ids() const {
    std::vector<std::string> out;
    for (auto m : medoids) out.push_back(ids[m]);
    return out;
}

std::size_t Clustering::cluster_of(std::size_t i) const {
    auto it = std::find(medoids.begin(), medoids.end(), assignment[i]);
    return static_cast<std::size_t>(it - medoids.begin()) + 1;
}

namespace {

struct DoubleSwap {
    std::size_t out[2];
    std::size_t in[2];
};

// One double-swap scan costs about C(k,2) * C(n-k,2) * n distance lookups.
bool double_swap_affordable(std::size_t n, std::size_t k) {
    constexpr double kBudget = 2e8;
    if (k < 2 || n < k + 2) return false;
    const double kk = static_cast<double>(k);
    const double nk = static_cast<double>(n - k);
    return kk * (kk - 1) / 2 * nk * (nk - 1) / 2 * static_cast<double>(n) <= kBudget;
}

// Best exchange of two medoids for two non-medoids at once, if it lowers the
// cost. Tried only after single swaps stop improving.
std::optional<DoubleSwap> best_double_swap(const DissimilarityMatrix& matrix,
                                           const std::vector<std::size_t>& medoids,
                                           const std::vector<bool>& is_medoid, double cost,
                                           double tolerance) {
    const std::size_t n = matrix.size();
    std::vector<std::size_t> order = medoids;
    std::sort(order.begin(), order.end());
    std::vector<std::size_t> candidates;
    for (std::size_t h = 0; h < n; ++h)
        if (!is_medoid[h]) candidates.push_back(h);

    std::optional<DoubleSwap> best;
    double best_cost = cost - tolerance * std::max(1.0, cost);
    std::vector<double> rest(n);
    for (std::size_t a = 0; a < order.size(); ++a) {
        for (std::size_t b = a + 1; b < order.size(); ++b) {
            for (std::size_t i = 0; i < n; ++i) {
                double d = kInf;
                for (std::size_t c = 0; c < order.size(); ++c)
                    if (c != a && c != b) d = std::min(d, matrix(i, order[c]));
                rest[i] = d;
            }
            for (std::size_t x = 0; x < candidates.size(); ++x) {
                for (std::size_t y = x + 1; y < candidates.size(); ++y) {
                    const std::size_t h = candidates[x], g = candidates[y];
                    double total = 0.0;
                    for (std::size_t i = 0; i < n && total < best_cost; ++i)
                        total += std::min({rest[i], matrix(i, h), matrix(i, g)});
                    if (total < best_cost) {
                        best_cost = total;
                        best = DoubleSwap{{order[a], order[b]}, {h, g}};
                    }
                }
            }
        }
    }
    return best;
}

}  // namespace

Clustering pam(const DissimilarityMatrix& matrix, std::size_t k) {
    const std::size_t n = matrix.size();
    if (k == 0) throw ValidationError("k must be at least 1");
    if (k > n)
        throw ValidationError("k = " + std::to_string(k) + " exceeds number of subjects " +
                              std::to_string(n));

    std::vector<bool> is_medoid(n, false);
    std::vector<std::size_t> medoids;
    std::vector<double> nearest(n, kInf);

    // BUILD: greedily add the candidate with the largest cost reduction.
    for (std::size_t step = 0; step < k; ++step) {
        std::size_t best = n;
        double best_gain = -kInf;
        for (std::size_t c = 0; c < n; ++c) {
            if (is_medoid[c]) continue;
            double gain = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double d = matrix(i, c);
                if (step == 0)
                    gain -= d;
                else if (d < nearest[i])
                    gain += nearest[i] - d;
            }
            if (gain > best_gain) {
                best_gain = gain;
                best = c;
            }
        }
        is_medoid[best] = true;
        medoids.push_back(best);
        for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], matrix(i, best));
    }

    std::vector<double> trace;
    trace.push_back(medoid_cost(matrix, medoids));

    // SWAP: apply the single (medoid, non-medoid) exchange with the most
    // negative cost change; when none improves, try exchanging two medoids
    // at once (small problems only) before stopping.
    const double tolerance = 1e-12;
    while (true) {
        std::vector<double> d1(n, kInf), d2(n, kInf);
        std::vector<std::size_t> owner(n, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto m : medoids) {
                const double d = matrix(i, m);
                if (d < d1[i] || (d == d1[i] && m < owner[i])) {
                    d2[i] = d1[i];
                    d1[i] = d;
                    owner[i] = m;
                } else if (d < d2[i]) {
                    d2[i] = d;
                }
            }
        }
        double best_delta = 0.0;
        std::size_t best_out = n, best_in = n;
        std::vector<std::size_t> order = medoids;
        std::sort(order.begin(), order.end());
        for (auto m : order) {
            for (std::size_t h = 0; h < n; ++h) {
                if (is_medoid[h]) continue;
                double delta = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    const double dh = matrix(i, h);
                    const double keep = owner[i] == m ? d2[i] : d1[i];
                    delta += std::min(keep, dh) - d1[i];
                }
                if (delta < best_delta - tolerance * std::max(1.0, trace.back())) {
                    best_delta = delta;
                    best_out = m;
                    best_in = h;
                }
            }
        }
        if (best_out != n) {
            is_medoid[best_out] = false;
            is_medoid[best_in] = true;
            std::replace(medoids.begin(), medoids.end(), best_out, best_in);
            trace.push_back(medoid_cost(matrix, medoids));
            continue;
        }
        if (!double_swap_affordable(n, k)) break;
        auto pair = best_double_swap(matrix, medoids, is_medoid, trace.back(), tolerance);
        if (!pair) break;
        for (std::size_t c = 0; c < 2; ++c) {
            is_medoid[pair->out[c]] = false;
            is_medoid[pair->in[c]] = true;
            std::replace(medoids.begin(), medoids.end(), pair->out[c], pair->in[c]);
        }
        trace.push_back(medoid_cost(matrix, medoids));
    }

    Clustering result;
    result.ids = matrix.ids();
    std::sort(medoids.begin(), medoids.end());
    result.medoids = medoids;
    result.assignment.assign(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        if (is_medoid[i]) {
            result.assignment[i] = i;
            continue;
        }
        double best = kInf;
        for (auto m : medoids) {
            if (matrix(i, m) < best) {
                best = matrix(i, m);
                result.assignment[i] = m;
            }
        }
    }
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) cost += matrix(i, result.assignment[i]);
    result.total_cost = cost;
    result.cost_trace = std::move(trace);
    return result;
}

void write_clustering_csv(std::ostream& out, const Clustering& clustering,
                          const std::vector<std::string>& comment_lines) {
    write_comments(out, comment_lines);
    out << "subject,cluster,medoid\n";
    for (std::size_t i = 0; i < clustering.ids.size(); ++i)
        out << clustering.ids[i] << ',' << clustering.cluster_of(i) << ','
            << clustering.ids[clustering.assignment[i]] << '\n';
}

void write_outlier_csv(std::ostream& out, const OutlierReport& report,
                       const std::vector<std::string>& comment_lines) {
    write_comments(out, comment_lines);
    out << "subject,score,flagged\n";
    for (std::size_t i = 0; i < report.ids.size(); ++i)
        out << report.ids[i] << ',' << format_real(report.scores[i]) << ','
            << (report.flagged[i] ? 1 : 0) << '\n';
}

}  // namespace spcdist
