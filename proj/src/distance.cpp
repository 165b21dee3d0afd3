#include "spcdist/distance.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "spcdist/error.hpp"
#include "spcdist/format.hpp"
#include "spcdist/parallel.hpp"

namespace spcdist {

namespace {

constexpr std::array<double, 4> kGaussNodes = {-0.86113631159405257522, -0.33998104358485626480,
                                               0.33998104358485626480, 0.86113631159405257522};
constexpr std::array<double, 4> kGaussWeights = {0.34785484513745385737, 0.65214515486254614263,
                                                 0.65214515486254614263, 0.34785484513745385737};

// Sorted union of both knot sets clipped to [lo, hi], plus the endpoints.
std::vector<double> merged_breaks(const std::vector<double>& a, const std::vector<double>& b,
                                  double lo, double hi) {
    std::vector<double> out;
    out.reserve(a.size() + b.size() + 2);
    out.push_back(lo);
    std::size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        double next;
        if (j >= b.size() || (i < a.size() && a[i] <= b[j]))
            next = a[i++];
        else
            next = b[j++];
        if (next > out.back() && next < hi) out.push_back(next);
    }
    if (hi > out.back()) out.push_back(hi);
    return out;
}

// Piece index for the interval starting at x, advanced monotonically.
std::ptrdiff_t advance(const std::vector<double>& knots, std::ptrdiff_t index, double x) {
    const auto last = static_cast<std::ptrdiff_t>(knots.size()) - 1;
    while (index < last && knots[static_cast<std::size_t>(index + 1)] <= x) ++index;
    return index;
}

void require_same_grid(const Subject& a, const Subject& b) {
    if (a.times != b.times)
        throw ValidationError("eucl distance needs identical time points for " + a.id + " and " +
                              b.id + "; use spc or ss for irregular grids");
    if (a.values.size() != a.times.size() || b.values.size() != b.times.size())
        throw ValidationError("subject times and values differ in length");
}

void require_valid(const Dataset& dataset) {
    auto problems = validate(dataset);
    if (problems.empty()) return;
    std::string msg = "invalid dataset:";
    for (const auto& p : problems) msg += "\n  " + p;
    throw ValidationError(msg);
}

std::vector<std::string> dataset_ids(const Dataset& dataset) {
    std::vector<std::string> ids;
    ids.reserve(dataset.size());
    for (const auto& s : dataset.subjects) ids.push_back(s.id);
    return ids;
}

}  // namespace

std::string to_string(DistanceMethod method) {
    switch (method) {
        case DistanceMethod::spc: return "spc";
        case DistanceMethod::ss: return "ss";
        case DistanceMethod::eucl: return "eucl";
    }
    return "?";
}

std::optional<DistanceMethod> parse_distance_method(std::string_view name) {
    if (name == "spc") return DistanceMethod::spc;
    if (name == "ss") return DistanceMethod::ss;
    if (name == "eucl") return DistanceMethod::eucl;
    return std::nullopt;
}

DissimilarityMatrix::DissimilarityMatrix(std::vector<std::string> ids)
    : ids_(std::move(ids)), entries_(ids_.size() * ids_.size(), 0.0) {}

DissimilarityMatrix::DissimilarityMatrix(std::vector<std::string> ids, std::vector<double> row_major)
    : ids_(std::move(ids)), entries_(std::move(row_major)) {
    if (entries_.size() != ids_.size() * ids_.size())
        throw ValidationError("matrix entry count does not match " + std::to_string(ids_.size()) +
                              " ids");
}

void DissimilarityMatrix::set_symmetric(std::size_t i, std::size_t j, double value) {
    (*this)(i, j) = value;
    (*this)(j, i) = value;
}

DissimilarityMatrix DissimilarityMatrix::without(const std::vector<std::string>& excluded) const {
    std::set<std::string> drop(excluded.begin(), excluded.end());
    for (const auto& id : drop)
        if (std::find(ids_.begin(), ids_.end(), id) == ids_.end())
            throw ValidationError("cannot exclude unknown id '" + id + "'");
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (!drop.contains(ids_[i])) keep.push_back(i);
    return submatrix(keep);
}

DissimilarityMatrix DissimilarityMatrix::submatrix(const std::vector<std::size_t>& indices) const {
    std::vector<std::string> ids;
    ids.reserve(indices.size());
    for (auto i : indices) ids.push_back(ids_.at(i));
    DissimilarityMatrix out(std::move(ids));
    for (std::size_t a = 0; a < indices.size(); ++a)
        for (std::size_t b = 0; b < indices.size(); ++b) out(a, b) = (*this)(indices[a], indices[b]);
    return out;
}

std::vector<std::string> DissimilarityMatrix::check(double symmetry_tolerance) const {
    std::vector<std::string> problems;
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
        if ((*this)(i, i) != 0.0) problems.push_back("nonzero diagonal at " + ids_[i]);
        for (std::size_t j = 0; j < n; ++j) {
            const double v = (*this)(i, j);
            if (!std::isfinite(v) || v < 0.0)
                problems.push_back("negative or non-finite entry at (" + ids_[i] + ", " + ids_[j] + ")");
            if (j > i) {
                const double w = (*this)(j, i);
                if (std::abs(v - w) > symmetry_tolerance * std::max(std::abs(v), std::abs(w)))
                    problems.push_back("asymmetric entries at (" + ids_[i] + ", " + ids_[j] + ")");
            }
        }
    }
    return problems;
}

double l2_between_fits(const SplineFit& a, const SplineFit& b, double t_lower, double t_upper) {
    const Domain domain{t_lower, t_upper};
    if (!(t_lower < t_upper)) throw ValidationError("l2_between_fits: empty domain");
    if (a.domain() != domain || b.domain() != domain)
        throw ValidationError("l2_between_fits: fits were built for a different domain");

    const std::vector<double> breaks = merged_breaks(a.knots(), b.knots(), t_lower, t_upper);
    std::ptrdiff_t ia = a.locate(breaks.front());
    std::ptrdiff_t ib = b.locate(breaks.front());
    double total = 0.0;
    for (std::size_t s = 0; s + 1 < breaks.size(); ++s) {
        const double x0 = breaks[s];
        const double x1 = breaks[s + 1];
        ia = advance(a.knots(), ia, x0);
        ib = advance(b.knots(), ib, x0);
        const double half = 0.5 * (x1 - x0);
        const double mid = 0.5 * (x1 + x0);
        double piece = 0.0;
        for (std::size_t q = 0; q < kGaussNodes.size(); ++q) {
            const double x = mid + half * kGaussNodes[q];
            const double diff = a.evaluate_piece(ia, x) - b.evaluate_piece(ib, x);
            piece += kGaussWeights[q] * diff * diff;
        }
        total += half * piece;
    }
    return std::sqrt(std::max(total, 0.0));
}

FitCache::FitCache(const Dataset& dataset, std::vector<double> lambdas)
    : dataset_(&dataset), lambdas_(std::move(lambdas)), fits_(dataset.size() * dataset.size()) {
    if (lambdas_.size() != dataset.size())
        throw ValidationError("FitCache: one lambda per subject required");
}

const SplineFit& FitCache::get(std::size_t data, std::size_t lambda_source) {
    const std::size_t n = dataset_->size();
    auto& slot = fits_.at(data * n + lambda_source);
    if (!slot) {
        slot = fit_given_lambda(dataset_->subjects[data], lambdas_[lambda_source], dataset_->domain);
        (data == lambda_source ? self_fits_ : cross_fits_)++;
    }
    return *slot;
}

double spc_distance(const Subject& subject_i, const Subject& subject_j, double lambda_i,
                    double lambda_j, Domain domain) {
    const SplineFit ii = fit_given_lambda(subject_i, lambda_i, domain);
    const SplineFit ji = fit_given_lambda(subject_j, lambda_i, domain);
    const SplineFit ij = fit_given_lambda(subject_i, lambda_j, domain);
    const SplineFit jj = fit_given_lambda(subject_j, lambda_j, domain);
    const double first = l2_between_fits(ii, ji, domain.lower, domain.upper);
    const double second = l2_between_fits(ij, jj, domain.lower, domain.upper);
    return 0.5 * (first + second);
}

double spc_distance(FitCache& cache, std::size_t i, std::size_t j) {
    const Domain& d = cache.domain();
    const double first = l2_between_fits(cache.get(i, i), cache.get(j, i), d.lower, d.upper);
    const double second = l2_between_fits(cache.get(i, j), cache.get(j, j), d.lower, d.upper);
    return 0.5 * (first + second);
}

double ss_distance(const Subject& subject_i, const Subject& subject_j, double lambda_i,
                   double lambda_j, Domain domain) {
    const SplineFit a = fit_given_lambda(subject_i, lambda_i, domain);
    const SplineFit b = fit_given_lambda(subject_j, lambda_j, domain);
    return l2_between_fits(a, b, domain.lower, domain.upper);
}

double eucl_distance(const Subject& subject_i, const Subject& subject_j) {
    require_same_grid(subject_i, subject_j);
    double sum = 0.0;
    for (std::size_t k = 0; k < subject_i.values.size(); ++k) {
        const double d = subject_i.values[k] - subject_j.values[k];
        sum += d * d;
    }
    return std::sqrt(sum);
}

DissimilarityMatrix distance_matrix_with_lambdas(const Dataset& dataset, DistanceMethod method,
                                                 const std::vector<double>& lambdas,
                                                 unsigned threads, DistanceRun* stats) {
    const std::size_t n = dataset.size();
    DissimilarityMatrix matrix(dataset_ids(dataset));
    if (method != DistanceMethod::eucl && lambdas.size() != n)
        throw ValidationError("one smoothing parameter per subject required");
    const Domain domain = dataset.domain;

    switch (method) {
        case DistanceMethod::eucl: {
            for (std::size_t j = 1; j < n; ++j) require_same_grid(dataset.subjects[0], dataset.subjects[j]);
            parallel_for(n, threads, [&](std::size_t i) {
                for (std::size_t j = i + 1; j < n; ++j)
                    matrix.set_symmetric(i, j, eucl_distance(dataset.subjects[i], dataset.subjects[j]));
            });
            break;
        }
        case DistanceMethod::ss: {
            std::vector<SplineFit> fits(n);
            parallel_for(n, threads, [&](std::size_t i) {
                fits[i] = fit_given_lambda(dataset.subjects[i], lambdas[i], domain);
            });
            parallel_for(n, threads, [&](std::size_t i) {
                for (std::size_t j = i + 1; j < n; ++j)
                    matrix.set_symmetric(i, j, l2_between_fits(fits[i], fits[j], domain.lower, domain.upper));
            });
            if (stats) stats->self_fits = n;
            break;
        }
        case DistanceMethod::spc: {
            // term(i, j) = || f_i(.; lambda_i) - f_j(.; lambda_i) ||. Each
            // lambda source i owns one column of fits, so every ordered
            // (data, source) fit is computed exactly once.
            std::vector<double> term(n * n, 0.0);
            parallel_for(n, threads, [&](std::size_t i) {
                std::vector<SplineFit> column(n);
                for (std::size_t j = 0; j < n; ++j)
                    column[j] = fit_given_lambda(dataset.subjects[j], lambdas[i], domain);
                for (std::size_t j = 0; j < n; ++j)
                    if (j != i)
                        term[i * n + j] = l2_between_fits(column[i], column[j], domain.lower, domain.upper);
            });
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = i + 1; j < n; ++j)
                    matrix.set_symmetric(i, j, 0.5 * (term[i * n + j] + term[j * n + i]));
            if (stats) {
                stats->self_fits = n;
                stats->cross_fits = n * (n - 1);
            }
            break;
        }
    }
    return matrix;
}

DistanceRun distance_matrix_run(const Dataset& dataset, DistanceMethod method, unsigned threads,
                                const RemlSearch& search) {
    require_valid(dataset);
    DistanceRun run;
    std::vector<double> lambdas;
    if (method != DistanceMethod::eucl) {
        run.reml.resize(dataset.size());
        parallel_for(dataset.size(), threads, [&](std::size_t i) {
            run.reml[i] = select_lambda_reml(dataset.subjects[i], dataset.domain, search);
        });
        for (const auto& r : run.reml) lambdas.push_back(r.lambda_hat);
    }
    run.matrix = distance_matrix_with_lambdas(dataset, method, lambdas, threads, &run);
    return run;
}

DissimilarityMatrix distance_matrix(const Dataset& dataset, DistanceMethod method, unsigned threads) {
    return distance_matrix_run(dataset, method, threads).matrix;
}

void write_matrix_csv(std::ostream& out, const DissimilarityMatrix& matrix,
                      const std::vector<std::string>& comment_lines) {
    for (const auto& line : comment_lines) out << (line.starts_with("#") ? "" : "# ") << line << '\n';
    out << "subject";
    for (const auto& id : matrix.ids()) out << ',' << id;
    out << '\n';
    for (std::size_t i = 0; i < matrix.size(); ++i) {
        out << matrix.ids()[i];
        for (std::size_t j = 0; j < matrix.size(); ++j) out << ',' << format_real(matrix(i, j));
        out << '\n';
    }
}

DissimilarityMatrix parse_matrix_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> ids;
    std::vector<double> entries;
    bool have_header = false;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (!line.empty() && line.back() == ',') fields.emplace_back();
        if (!have_header) {
            if (fields.empty() || fields[0] != "subject")
                throw ValidationError("matrix csv: expected header starting with 'subject'");
            ids.assign(fields.begin() + 1, fields.end());
            have_header = true;
            continue;
        }
        if (fields.size() != ids.size() + 1)
            throw ValidationError("matrix csv line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(ids.size() + 1) + " fields");
        if (rows >= ids.size() || fields[0] != ids[rows])
            throw ValidationError("matrix csv line " + std::to_string(line_no) +
                                  ": row label does not match header order");
        for (std::size_t j = 1; j < fields.size(); ++j) {
            auto v = parse_real(fields[j]);
            if (!v)
                throw ValidationError("matrix csv line " + std::to_string(line_no) +
                                      ": non-numeric entry '" + fields[j] + "'");
            entries.push_back(*v);
        }
        ++rows;
    }
    if (!have_header) throw ValidationError("matrix csv: empty input");
    if (rows != ids.size())
        throw ValidationError("matrix csv: " + std::to_string(rows) + " rows for " +
                              std::to_string(ids.size()) + " ids");
    DissimilarityMatrix matrix(std::move(ids), std::move(entries));
    auto problems = matrix.check();
    if (!problems.empty()) throw ValidationError("matrix csv: " + problems.front());
    return matrix;
}

DissimilarityMatrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    return parse_matrix_csv(in);
}

}  // namespace spcdist
