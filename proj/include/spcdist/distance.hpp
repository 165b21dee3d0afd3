#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spcdist/dataset.hpp"
#include "spcdist/spline.hpp"

namespace spcdist {

enum class DistanceMethod { spc, ss, eucl };

std::string to_string(DistanceMethod method);
/// Accepts "spc", "ss", "eucl".
std::optional<DistanceMethod> parse_distance_method(std::string_view name);

/// Square symmetric dissimilarity matrix with labelled rows.
class DissimilarityMatrix {
public:
    DissimilarityMatrix() = default;
    explicit DissimilarityMatrix(std::vector<std::string> ids);
    DissimilarityMatrix(std::vector<std::string> ids, std::vector<double> row_major);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    double operator()(std::size_t i, std::size_t j) const { return entries_[i * ids_.size() + j]; }
    double& operator()(std::size_t i, std::size_t j) { return entries_[i * ids_.size() + j]; }
    const std::vector<double>& entries() const { return entries_; }

    /// Sets (i,j) and (j,i).
    void set_symmetric(std::size_t i, std::size_t j, double value);

    /// Keeps rows/columns whose id is not in `excluded`. Unknown ids throw.
    DissimilarityMatrix without(const std::vector<std::string>& excluded) const;

    /// Principal submatrix on the given indices, in that order.
    DissimilarityMatrix submatrix(const std::vector<std::size_t>& indices) const;

    /// Violations of symmetry (relative tolerance), zero diagonal and
    /// nonnegativity; empty when the matrix is a valid dissimilarity.
    std::vector<std::string> check(double symmetry_tolerance = 1e-12) const;

private:
    std::vector<std::string> ids_;
    std::vector<double> entries_;
};

/// sqrt of the integral of (a - b)^2 over [t_lower, t_upper], exact up to
/// rounding: the union of both knot sets and the endpoints splits the domain
/// into pieces where the integrand is a polynomial of degree <= 6, each
/// integrated by 4-point Gauss-Legendre. Throws ValidationError when either
/// fit was built for a different domain.
double l2_between_fits(const SplineFit& a, const SplineFit& b, double t_lower, double t_upper);

/// Fits of data subject j under the smoothing parameter selected for
/// subject i, computed on first request and reused afterwards. Not safe for
/// concurrent get(); distance_matrix uses per-source columns instead.
class FitCache {
public:
    FitCache(const Dataset& dataset, std::vector<double> lambdas);

    /// f_data(.; lambda_source)
    const SplineFit& get(std::size_t data, std::size_t lambda_source);

    std::size_t self_fits() const { return self_fits_; }
    std::size_t cross_fits() const { return cross_fits_; }
    std::size_t size() const { return dataset_->size(); }
    double lambda(std::size_t i) const { return lambdas_[i]; }
    const Domain& domain() const { return dataset_->domain; }

private:
    const Dataset* dataset_;
    std::vector<double> lambdas_;
    std::vector<std::optional<SplineFit>> fits_;  // index data * n + source
    std::size_t self_fits_ = 0;
    std::size_t cross_fits_ = 0;
};

/// Smoothing-parameter-commutation distance: the average of
/// ||f_i(.;lambda_i) - f_j(.;lambda_i)|| and ||f_i(.;lambda_j) - f_j(.;lambda_j)||
/// in L2 over the domain.
double spc_distance(const Subject& subject_i, const Subject& subject_j, double lambda_i,
                    double lambda_j, Domain domain);
double spc_distance(FitCache& cache, std::size_t i, std::size_t j);

/// L2 distance between the two curves each fitted at its own lambda.
double ss_distance(const Subject& subject_i, const Subject& subject_j, double lambda_i,
                   double lambda_j, Domain domain);

/// sqrt(sum_k (y_ik - y_jk)^2). Both subjects must share the same time grid.
double eucl_distance(const Subject& subject_i, const Subject& subject_j);

struct DistanceRun {
    DissimilarityMatrix matrix;
    std::vector<RemlSelection> reml;  // empty for eucl
    std::size_t self_fits = 0;
    std::size_t cross_fits = 0;
};

/// Full matrix. For spc and ss, REML runs once per subject; spc then fits
/// every subject under every other subject's lambda exactly once. `threads`
/// = 0 uses the hardware concurrency. Results do not depend on `threads`.
DistanceRun distance_matrix_run(const Dataset& dataset, DistanceMethod method,
                                unsigned threads = 1, const RemlSearch& search = {});

DissimilarityMatrix distance_matrix(const Dataset& dataset, DistanceMethod method,
                                    unsigned threads = 1);

/// spc/ss matrices for externally supplied lambdas (one per subject).
DissimilarityMatrix distance_matrix_with_lambdas(const Dataset& dataset, DistanceMethod method,
                                                 const std::vector<double>& lambdas,
                                                 unsigned threads = 1, DistanceRun* stats = nullptr);

/// Matrix CSV: header `subject,id1,...,idn`, then `id,v1,...,vn` rows at 17
/// significant digits. Lines beginning with '#' are written verbatim from
/// `comment_lines` before the header and skipped by the reader.
void write_matrix_csv(std::ostream& out, const DissimilarityMatrix& matrix,
                      const std::vector<std::string>& comment_lines = {});
DissimilarityMatrix parse_matrix_csv(std::istream& in);
DissimilarityMatrix read_matrix_csv(const std::string& path);

}  // namespace spcdist
