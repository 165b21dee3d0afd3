#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "spcdist/dataset.hpp"
#include "spcdist/distance.hpp"

namespace spcdist {

enum class CurveFamily { constant, periodic, linear, nonlinear };
enum class NoiseMechanism { wn, ar, sarma, bilr };

inline constexpr std::array<CurveFamily, 4> kAllFamilies = {
    CurveFamily::constant, CurveFamily::periodic, CurveFamily::linear, CurveFamily::nonlinear};
inline constexpr std::array<NoiseMechanism, 4> kAllNoises = {
    NoiseMechanism::wn, NoiseMechanism::ar, NoiseMechanism::sarma, NoiseMechanism::bilr};

/// "f1".."f4"
std::string to_string(CurveFamily family);
/// "WN", "AR", "SARMA", "BILR"
std::string to_string(NoiseMechanism noise);

/// Discarded samples before recursive noise paths are emitted.
inline constexpr std::size_t kNoiseBurnIn = 500;

using Rng = std::mt19937_64;

/// True curve values of one family at the given times (t in [0, 1]).
std::vector<double> gen_curve(CurveFamily family, double eta, std::span<const double> grid);

/// `length` noise values; recursive mechanisms start from zero lags and drop
/// kNoiseBurnIn samples first.
std::vector<double> gen_noise(NoiseMechanism mechanism, std::size_t length, Rng& rng);

/// Equispaced grid t_k = k/(size-1), k = 0..size-1.
std::vector<double> unit_grid(std::size_t size);

struct SimConfig {
    std::size_t series_per_cell = 10;
    std::size_t grid_size = 200;
    std::size_t replicates = 200;
    std::uint64_t seed = 1;
    /// Multiplies every noise path; 0 gives noise-free series.
    double noise_scale = 1.0;
};

/// Noise-free curve values and their pairwise sqrt(sum_k (f_i - f_j)^2).
struct TruthTable {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> curves;
    DissimilarityMatrix distances;
};

TruthTable make_truth(std::vector<std::string> ids, std::vector<std::vector<double>> curves);

/// One replicate's simulated series for every family x noise cell
/// (16 * series_per_cell subjects, cell-major order).
struct SimulatedReplicate {
    Dataset dataset;
    TruthTable truth;
    /// Subject indices per cell, cells ordered family-major as kAllFamilies x kAllNoises.
    std::vector<std::vector<std::size_t>> cells;
};

/// Each (replicate, cell) draws from its own stream derived from the seed, so
/// results do not depend on evaluation order.
Rng cell_stream(std::uint64_t seed, std::size_t replicate, std::size_t cell);

SimulatedReplicate simulate_replicate(const SimConfig& config, std::size_t replicate);

/// Affine-calibrated, truth-weighted loss over ordered pairs i != j:
///   min_{a,b} sum (a + b*est - truth)^2 / truth.
/// Throws ValidationError when a true off-diagonal distance is 0.
double q_criterion(const DissimilarityMatrix& estimated, const DissimilarityMatrix& truth);

/// Sum over ordered pairs i != j of the squared difference between the rank
/// of est(i,j) and of truth(i,j), ranks taken among the unordered pairs with
/// midranks for ties.
double r_criterion(const DissimilarityMatrix& estimated, const DissimilarityMatrix& truth);

/// Midranks (1-based) of values.
std::vector<double> midranks(std::span<const double> values);

struct CriterionPair {
    double q = 0.0;
    double r = 0.0;
};

struct BenchmarkRow {
    std::string family;  // "f1".."f4" or "ALL"
    std::string noise;   // "WN".. or "ALL"
    DistanceMethod method;
    double q_mean = 0.0;
    double r_mean = 0.0;
    std::vector<CriterionPair> per_replicate;
};

struct BenchmarkReport {
    SimConfig config;
    std::vector<DistanceMethod> methods;
    std::vector<BenchmarkRow> rows;  // 16 cells then ALL, each for every method

    const BenchmarkRow& row(const std::string& family, const std::string& noise,
                            DistanceMethod method) const;
};

/// Runs the full simulation study. `threads` = 0 uses all cores; output is
/// identical for every thread count.
BenchmarkReport run_benchmark(const SimConfig& config, const std::vector<DistanceMethod>& methods,
                              unsigned threads = 1);

/// `family,noise,method,Q_mean,R_mean`, cells then ALL.
void write_benchmark_csv(std::ostream& out, const BenchmarkReport& report,
                         const std::vector<std::string>& comment_lines = {});
/// `replicate,family,noise,method,Q,R`
void write_benchmark_raw_csv(std::ostream& out, const BenchmarkReport& report,
                             const std::vector<std::string>& comment_lines = {});

}  // namespace spcdist
