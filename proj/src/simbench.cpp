#include "spcdist/simbench.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <ostream>

#include "spcdist/error.hpp"
#include "spcdist/format.hpp"
#include "spcdist/parallel.hpp"

namespace spcdist {

namespace {

void write_comments(std::ostream& out, const std::vector<std::string>& lines) {
    for (const auto& line : lines) out << (line.starts_with("#") ? "" : "# ") << line << '\n';
}

std::string two_digit(std::size_t v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

}  // namespace

std::string to_string(CurveFamily family) {
    switch (family) {
        case CurveFamily::constant: return "f1";
        case CurveFamily::periodic: return "f2";
        case CurveFamily::linear: return "f3";
        case CurveFamily::nonlinear: return "f4";
    }
    return "?";
}

std::string to_string(NoiseMechanism noise) {
    switch (noise) {
        case NoiseMechanism::wn: return "WN";
        case NoiseMechanism::ar: return "AR";
        case NoiseMechanism::sarma: return "SARMA";
        case NoiseMechanism::bilr: return "BILR";
    }
    return "?";
}

std::vector<double> gen_curve(CurveFamily family, double eta, std::span<const double> grid) {
    constexpr double pi = std::numbers::pi;
    std::vector<double> out(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double t = grid[k];
        switch (family) {
            case CurveFamily::constant: out[k] = eta; break;
            case CurveFamily::periodic:
                out[k] = std::sin(2.0 * pi * t) - t + 2.0 * eta * std::cos(4.0 * pi * t);
                break;
            case CurveFamily::linear: out[k] = 3.0 * t + 2.0 * eta * t; break;
            case CurveFamily::nonlinear:
                out[k] = 5.0 * eta * ((t - 0.5) * (t - 0.5) - 2.0 * t * (1.0 - t));
                break;
        }
    }
    return out;
}

std::vector<double> gen_noise(NoiseMechanism mechanism, std::size_t length, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> out;
    out.reserve(length);
    if (mechanism == NoiseMechanism::wn) {
        for (std::size_t k = 0; k < length; ++k) out.push_back(normal(rng));
        return out;
    }

    const std::size_t total = kNoiseBurnIn + length;
    constexpr std::size_t lag = 10;
    // Ring buffers of past eps and xi; all lags start at zero.
    std::array<double, lag> eps{};
    std::array<double, lag> xi{};
    for (std::size_t k = 0; k < total; ++k) {
        const double x = normal(rng);
        const std::size_t prev = (k + lag - 1) % lag;  // slot of k-1
        const std::size_t slot = k % lag;              // slot of k-10, overwritten below
        double e = 0.0;
        switch (mechanism) {
            case NoiseMechanism::ar: e = 0.8 * eps[prev] + x; break;
            case NoiseMechanism::sarma: e = 0.8 * eps[slot] + 0.8 * xi[slot] + x; break;
            case NoiseMechanism::bilr:
                e = 0.8 * eps[prev] + 0.2 * xi[prev] - 0.2 * eps[prev] * xi[prev] + x;
                break;
            case NoiseMechanism::wn: break;
        }
        eps[slot] = e;
        xi[slot] = x;
        if (k >= kNoiseBurnIn) out.push_back(e);
    }
    return out;
}

std::vector<double> unit_grid(std::size_t size) {
    if (size < 2) throw ValidationError("grid needs at least 2 points");
    std::vector<double> grid(size);
    for (std::size_t k = 0; k < size; ++k)
        grid[k] = static_cast<double>(k) / static_cast<double>(size - 1);
    return grid;
}

TruthTable make_truth(std::vector<std::string> ids, std::vector<std::vector<double>> curves) {
    if (ids.size() != curves.size()) throw ValidationError("one curve per id required");
    TruthTable truth;
    truth.distances = DissimilarityMatrix(ids);
    for (std::size_t i = 0; i < curves.size(); ++i) {
        for (std::size_t j = i + 1; j < curves.size(); ++j) {
            if (curves[i].size() != curves[j].size()) throw ValidationError("curve lengths differ");
            double sum = 0.0;
            for (std::size_t k = 0; k < curves[i].size(); ++k) {
                const double d = curves[i][k] - curves[j][k];
                sum += d * d;
            }
            truth.distances.set_symmetric(i, j, std::sqrt(sum));
        }
    }
    truth.ids = std::move(ids);
    truth.curves = std::move(curves);
    return truth;
}

Rng cell_stream(std::uint64_t seed, std::size_t replicate, std::size_t cell) {
    const auto r = static_cast<std::uint64_t>(replicate);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r), static_cast<std::uint32_t>(r >> 32),
                      static_cast<std::uint32_t>(cell), 0x5bd1e995u};
    return Rng(seq);
}

SimulatedReplicate simulate_replicate(const SimConfig& config, std::size_t replicate) {
    if (config.series_per_cell < 1 || config.grid_size < kMinObservations)
        throw ValidationError("series_per_cell must be >= 1 and grid_size >= " +
                              std::to_string(kMinObservations));
    const std::vector<double> grid = unit_grid(config.grid_size);
    SimulatedReplicate rep;
    rep.dataset.domain = Domain{0.0, 1.0};
    std::vector<std::string> ids;
    std::vector<std::vector<double>> curves;

    std::size_t cell = 0;
    for (CurveFamily family : kAllFamilies) {
        for (NoiseMechanism noise : kAllNoises) {
            Rng rng = cell_stream(config.seed, replicate, cell);
            std::normal_distribution<double> eta_dist(1.0, 0.3);
            std::vector<std::size_t> members;
            for (std::size_t s = 0; s < config.series_per_cell; ++s) {
                const double eta = eta_dist(rng);
                std::vector<double> truth = gen_curve(family, eta, grid);
                std::vector<double> eps = gen_noise(noise, grid.size(), rng);
                Subject subject;
                subject.id = to_string(family) + "_" + to_string(noise) + "_" + two_digit(s + 1);
                subject.times = grid;
                subject.values.resize(grid.size());
                for (std::size_t k = 0; k < grid.size(); ++k)
                    subject.values[k] = truth[k] + config.noise_scale * eps[k];
                members.push_back(rep.dataset.subjects.size());
                ids.push_back(subject.id);
                curves.push_back(std::move(truth));
                rep.dataset.subjects.push_back(std::move(subject));
            }
            rep.cells.push_back(std::move(members));
            ++cell;
        }
    }
    rep.truth = make_truth(std::move(ids), std::move(curves));
    return rep;
}

double q_criterion(const DissimilarityMatrix& estimated, const DissimilarityMatrix& truth) {
    if (estimated.ids() != truth.ids()) throw ValidationError("Q: estimated and true ids differ");
    const std::size_t n = truth.size();
    if (n < 2) throw ValidationError("Q: need at least 2 subjects");

    double w_sum = 0.0, wx = 0.0, wy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double d = truth(i, j);
            if (!(d > 0.0))
                throw ValidationError("Q: true distance between " + truth.ids()[i] + " and " +
                                      truth.ids()[j] + " is zero");
            const double w = 1.0 / d;
            w_sum += w;
            wx += w * estimated(i, j);
            wy += w * d;
        }
    }
    const double mx = wx / w_sum;
    const double my = wy / w_sum;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double w = 1.0 / truth(i, j);
            const double dx = estimated(i, j) - mx;
            const double dy = truth(i, j) - my;
            sxx += w * dx * dx;
            sxy += w * dx * dy;
            syy += w * dy * dy;
        }
    }
    const double q = sxx > 0.0 ? syy - sxy * sxy / sxx : syy;
    return std::max(q, 0.0);
}

std::vector<double> midranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t q = i; q <= j; ++q) ranks[order[q]] = rank;
        i = j + 1;
    }
    return ranks;
}

double r_criterion(const DissimilarityMatrix& estimated, const DissimilarityMatrix& truth) {
    if (estimated.ids() != truth.ids()) throw ValidationError("R: estimated and true ids differ");
    const std::size_t n = truth.size();
    std::vector<double> est, tru;
    est.reserve(n * (n - 1) / 2);
    tru.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            est.push_back(estimated(i, j));
            tru.push_back(truth(i, j));
        }
    }
    const auto re = midranks(est);
    const auto rt = midranks(tru);
    double sum = 0.0;
    for (std::size_t p = 0; p < re.size(); ++p) sum += (re[p] - rt[p]) * (re[p] - rt[p]);
    return 2.0 * sum;  // (i,j) and (j,i)
}

const BenchmarkRow& BenchmarkReport::row(const std::string& family, const std::string& noise,
                                         DistanceMethod method) const {
    for (const auto& r : rows)
        if (r.family == family && r.noise == noise && r.method == method) return r;
    throw ValidationError("no benchmark row for " + family + "+" + noise + " " + to_string(method));
}

BenchmarkReport run_benchmark(const SimConfig& config, const std::vector<DistanceMethod>& methods,
                              unsigned threads) {
    if (config.replicates < 1) throw ValidationError("replicates must be >= 1");
    if (config.series_per_cell < 2) throw ValidationError("series_per_cell must be >= 2");
    if (methods.empty()) throw ValidationError("at least one distance method required");
    std::vector<DistanceMethod> unique_methods;
    for (auto m : methods)
        if (std::find(unique_methods.begin(), unique_methods.end(), m) == unique_methods.end())
            unique_methods.push_back(m);

    const std::size_t n_cells = kAllFamilies.size() * kAllNoises.size();
    const std::size_t n_groups = n_cells + 1;  // cells then ALL
    // results[replicate][group * n_methods + method]
    std::vector<std::vector<CriterionPair>> results(config.replicates);

    parallel_for(config.replicates, threads, [&](std::size_t r) {
        const SimulatedReplicate rep = simulate_replicate(config, r);
        auto& slot = results[r];
        slot.resize(n_groups * unique_methods.size());
        for (std::size_t mi = 0; mi < unique_methods.size(); ++mi) {
            const DissimilarityMatrix est =
                distance_matrix_run(rep.dataset, unique_methods[mi], 1).matrix;
            for (std::size_t c = 0; c < n_cells; ++c) {
                const auto sub_est = est.submatrix(rep.cells[c]);
                const auto sub_true = rep.truth.distances.submatrix(rep.cells[c]);
                slot[c * unique_methods.size() + mi] = {q_criterion(sub_est, sub_true),
                                                        r_criterion(sub_est, sub_true)};
            }
            slot[n_cells * unique_methods.size() + mi] = {q_criterion(est, rep.truth.distances),
                                                          r_criterion(est, rep.truth.distances)};
        }
    });

    BenchmarkReport report;
    report.config = config;
    report.methods = unique_methods;
    for (std::size_t g = 0; g < n_groups; ++g) {
        for (std::size_t mi = 0; mi < unique_methods.size(); ++mi) {
            BenchmarkRow row;
            if (g < n_cells) {
                row.family = to_string(kAllFamilies[g / kAllNoises.size()]);
                row.noise = to_string(kAllNoises[g % kAllNoises.size()]);
            } else {
                row.family = "ALL";
                row.noise = "ALL";
            }
            row.method = unique_methods[mi];
            double q_sum = 0.0, r_sum = 0.0;
            for (std::size_t r = 0; r < config.replicates; ++r) {
                const CriterionPair& p = results[r][g * unique_methods.size() + mi];
                row.per_replicate.push_back(p);
                q_sum += p.q;
                r_sum += p.r;
            }
            row.q_mean = q_sum / static_cast<double>(config.replicates);
            row.r_mean = r_sum / static_cast<double>(config.replicates);
            report.rows.push_back(std::move(row));
        }
    }
    return report;
}

void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report,
                         const std::vector<std::string>& comment_lines) {
    write_comments(out, comment_lines);
    out << "family,noise,method,Q_mean,R_mean\n";
    for (const auto& row : report.rows)
        out << row.family << ',' << row.noise << ',' << to_string(row.method) << ','
            << format_real(row.q_mean) << ',' << format_real(row.r_mean) << '\n';
}

void write_benchmark_raw_csv(std::ostream& out, const BenchmarkReport& report,
                             const std::vector<std::string>& comment_lines) {
    write_comments(out, comment_lines);
    out << "replicate,family,noise,method,Q,R\n";
    for (std::size_t r = 0; r < report.config.replicates; ++r)
        for (const auto& row : report.rows)
            out << r << ',' << row.family << ',' << row.noise << ',' << to_string(row.method) << ','
                << format_real(row.per_replicate[r].q) << ',' << format_real(row.per_replicate[r].r)
                << '\n';
}

}  // namespace spcdist
