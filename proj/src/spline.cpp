#include "spcdist/spline.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "band_solver.hpp"
#include "spcdist/error.hpp"
#include "spcdist/format.hpp"

namespace spcdist {

namespace {

// Reinsch ingredients for knots t_0 < ... < t_{K-1}. Q is K x (K-2) with
// column j holding the second divided difference around interior knot j+1;
// R is the (K-2) x (K-2) tridiagonal with (h_j + h_{j+1})/3 on the diagonal
// and h_{j+1}/6 off it.
struct ReinschBands {
    std::vector<double> h;
    std::vector<double> qa, qb, qc;   // Q(j,j), Q(j+1,j), Q(j+2,j)
    detail::PentaBands qtq;
    std::vector<double> r0, r1;
};

ReinschBands reinsch_bands(std::span<const double> t) {
    const std::size_t k = t.size();
    const std::size_t m = k - 2;
    ReinschBands b;
    b.h.resize(k - 1);
    for (std::size_t i = 0; i + 1 < k; ++i) b.h[i] = t[i + 1] - t[i];
    b.qa.resize(m);
    b.qb.resize(m);
    b.qc.resize(m);
    b.r0.resize(m);
    b.r1.assign(m, 0.0);
    for (std::size_t j = 0; j < m; ++j) {
        b.qa[j] = 1.0 / b.h[j];
        b.qc[j] = 1.0 / b.h[j + 1];
        b.qb[j] = -b.qa[j] - b.qc[j];
        b.r0[j] = (b.h[j] + b.h[j + 1]) / 3.0;
        if (j + 1 < m) b.r1[j] = b.h[j + 1] / 6.0;
    }
    b.qtq = detail::PentaBands(m);
    for (std::size_t j = 0; j < m; ++j) {
        b.qtq.diag[j] = b.qa[j] * b.qa[j] + b.qb[j] * b.qb[j] + b.qc[j] * b.qc[j];
        if (j + 1 < m) b.qtq.off1[j] = b.qb[j] * b.qa[j + 1] + b.qc[j] * b.qb[j + 1];
        if (j + 2 < m) b.qtq.off2[j] = b.qc[j] * b.qa[j + 2];
    }
    return b;
}

std::vector<double> apply_qt(const ReinschBands& b, std::span<const double> y) {
    const std::size_t m = b.qa.size();
    std::vector<double> out(m);
    for (std::size_t j = 0; j < m; ++j) out[j] = b.qa[j] * y[j] + b.qb[j] * y[j + 1] + b.qc[j] * y[j + 2];
    return out;
}

detail::PentaBands penalized_system(const ReinschBands& b, double alpha) {
    detail::PentaBands a = b.qtq;
    for (std::size_t j = 0; j < a.size(); ++j) {
        a.diag[j] = b.r0[j] + alpha * a.diag[j];
        a.off1[j] = b.r1[j] + alpha * a.off1[j];
        a.off2[j] = alpha * a.off2[j];
    }
    return a;
}

[[noreturn]] void throw_singular(const std::string& id, std::span<const double> t, std::size_t row) {
    // Row j of the system belongs to interior knot j+1.
    std::size_t lo = row;
    std::size_t hi = std::min(row + 2, t.size() - 1);
    throw NumericError("subject " + id + ": smoothing system numerically singular near knots " +
                       format_real(t[lo]) + " .. " + format_real(t[hi]) +
                       " (near-duplicate time points?)");
}

void require_fit_input(const Subject& s, Domain domain) {
    if (s.times.size() != s.values.size())
        throw ValidationError("subject " + s.id + ": times and values differ in length");
    if (s.times.size() < kMinObservations)
        throw ValidationError("subject " + s.id + ": need at least " +
                              std::to_string(kMinObservations) + " observations");
    for (std::size_t k = 1; k < s.times.size(); ++k)
        if (!(s.times[k - 1] < s.times[k]))
            throw ValidationError("subject " + s.id + ": times not strictly increasing");
    if (!(domain.lower < domain.upper)) throw ValidationError("empty domain");
    if (s.times.front() < domain.lower || s.times.back() > domain.upper)
        throw ValidationError("subject " + s.id + ": times outside domain");
}

}  // namespace

SplineFit::SplineFit(std::string subject_id, std::vector<double> knots,
                     std::vector<CubicPiece> pieces, double lambda, Domain domain)
    : subject_id_(std::move(subject_id)),
      knots_(std::move(knots)),
      pieces_(std::move(pieces)),
      lambda_(lambda),
      domain_(domain) {}

std::vector<double> SplineFit::fitted_values() const {
    std::vector<double> out(pieces_.size());
    for (std::size_t i = 0; i < pieces_.size(); ++i) out[i] = pieces_[i].value;
    return out;
}

std::ptrdiff_t SplineFit::locate(double t) const {
    if (t < knots_.front()) return -1;
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t);
    return static_cast<std::ptrdiff_t>(it - knots_.begin()) - 1;
}

double SplineFit::evaluate_piece(std::ptrdiff_t index, double t) const {
    if (index < 0) return pieces_.front().value + pieces_.front().d1 * (t - knots_.front());
    auto i = static_cast<std::size_t>(index);
    return pieces_[i](t - knots_[i]);
}

double kernel_entry(double s, double t, double t_lower, double t_upper) {
    if (!(t_lower < t_upper)) throw ValidationError("kernel_entry: empty domain");
    if (s < t_lower || s > t_upper || t < t_lower || t > t_upper)
        throw ValidationError("kernel_entry: time outside domain");
    const double a = s - t_lower;
    const double b = t - t_lower;
    const double lo = std::min(a, b);
    const double hi = std::max(a, b);
    const double len = t_upper - t_lower;
    return lo * lo * (3.0 * hi - lo) / 6.0 / (len * len);
}

MixedModelParts build_mixed_model_parts(std::span<const double> times, Domain domain) {
    const auto k = static_cast<Eigen::Index>(times.size());
    MixedModelParts parts;
    parts.times.assign(times.begin(), times.end());
    parts.domain = domain;
    parts.design_fixed.resize(k, 2);
    parts.kernel_R.resize(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        parts.design_fixed(i, 0) = 1.0;
        parts.design_fixed(i, 1) = times[i];
        for (Eigen::Index j = 0; j <= i; ++j) {
            double v = kernel_entry(times[i], times[j], domain.lower, domain.upper);
            parts.kernel_R(i, j) = v;
            parts.kernel_R(j, i) = v;
        }
    }
    return parts;
}

SplineFit fit_given_lambda(const Subject& subject, double lambda, Domain domain) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("smoothing parameter must be positive and finite");
    require_fit_input(subject, domain);

    const auto& t = subject.times;
    const auto& y = subject.values;
    const std::size_t k = t.size();
    const double alpha = static_cast<double>(k) * lambda * domain.length() * domain.length();

    ReinschBands b = reinsch_bands(t);
    detail::PentaLdlt ldlt;
    if (auto bad = ldlt.factor(penalized_system(b, alpha))) throw_singular(subject.id, t, *bad);
    std::vector<double> gamma = apply_qt(b, y);
    ldlt.solve_in_place(gamma);

    // f = y - alpha Q gamma; second derivatives are 0, gamma, 0.
    std::vector<double> f(y.begin(), y.end());
    for (std::size_t j = 0; j < gamma.size(); ++j) {
        const double g = alpha * gamma[j];
        f[j] -= b.qa[j] * g;
        f[j + 1] -= b.qb[j] * g;
        f[j + 2] -= b.qc[j] * g;
    }
    std::vector<double> second(k, 0.0);
    std::copy(gamma.begin(), gamma.end(), second.begin() + 1);

    std::vector<CubicPiece> pieces(k);
    for (std::size_t i = 0; i + 1 < k; ++i) {
        const double h = b.h[i];
        CubicPiece& p = pieces[i];
        p.value = f[i];
        p.d2 = second[i];
        p.d3 = (second[i + 1] - second[i]) / h;
        p.d1 = (f[i + 1] - f[i]) / h - h * (2.0 * second[i] + second[i + 1]) / 6.0;
    }
    const CubicPiece& last = pieces[k - 2];
    const double h = b.h[k - 2];
    pieces[k - 1] = CubicPiece{f[k - 1], last.d1 + last.d2 * h + 0.5 * last.d3 * h * h, 0.0, 0.0};

    return SplineFit(subject.id, t, std::move(pieces), lambda, domain);
}

double evaluate(const SplineFit& fit, double t) {
    if (!fit.domain().contains(t))
        throw ValidationError("evaluate: t = " + format_real(t) + " outside domain [" +
                              format_real(fit.domain().lower) + ", " +
                              format_real(fit.domain().upper) + "]");
    return fit.evaluate_piece(fit.locate(t), t);
}

RemlProfile::RemlProfile(const Subject& subject, Domain domain)
    : times_(subject.times), y_(subject.values) {
    require_fit_input(subject, domain);
    ReinschBands b = reinsch_bands(times_);
    h_ = std::move(b.h);
    qty_ = apply_qt(b, y_);
    qtq0_ = b.qtq.diag;
    qtq1_ = b.qtq.off1;
    qtq2_ = b.qtq.off2;
    rb0_ = std::move(b.r0);
    rb1_ = std::move(b.r1);
    length_sq_ = domain.length() * domain.length();

    detail::PentaLdlt ldlt;
    if (auto bad = ldlt.factor(b.qtq)) throw_singular(subject.id, times_, *bad);
    log_det_qtq_ = ldlt.log_determinant();

    const double n = static_cast<double>(times_.size());
    // det(X'X) = n * sum (t - mean)^2, formed without cancellation.
    const double mean = std::accumulate(times_.begin(), times_.end(), 0.0) / n;
    double ctt = 0.0;
    for (double ti : times_) ctt += (ti - mean) * (ti - mean);
    log_det_xtx_ = std::log(n) + std::log(ctt);
}

RemlPoint RemlProfile::at(double lambda) const {
    const std::size_t k = times_.size();
    const std::size_t m = k - 2;
    const double alpha = static_cast<double>(k) * lambda * length_sq_;

    detail::PentaBands a(m);
    for (std::size_t j = 0; j < m; ++j) {
        a.diag[j] = rb0_[j] + alpha * qtq0_[j];
        a.off1[j] = rb1_[j] + alpha * qtq1_[j];
        a.off2[j] = alpha * qtq2_[j];
    }
    detail::PentaLdlt ldlt;
    if (auto bad = ldlt.factor(a)) {
        throw NumericError("REML system singular at lambda = " + format_real(lambda) + " (row " +
                           std::to_string(*bad) + ")");
    }
    std::vector<double> gamma = qty_;
    ldlt.solve_in_place(gamma);
    double quad = 0.0;
    for (std::size_t j = 0; j < m; ++j) quad += qty_[j] * gamma[j];
    quad *= alpha;  // y' P y with P = Q (Q'VQ)^{-1} Q'

    const double dof = static_cast<double>(m);
    // log|V| + log|X'V^-1 X| = log|Q'VQ| - log|Q'Q| + log|X'X|
    const double log_det_qvq = ldlt.log_determinant() - dof * std::log(alpha);
    const double log_dets = log_det_qvq - log_det_qtq_ + log_det_xtx_;

    RemlPoint p;
    p.sigma2 = quad / dof;
    p.log_likelihood =
        -0.5 * (dof * (std::log(2.0 * std::numbers::pi * p.sigma2) + 1.0) + log_dets);
    return p;
}

std::vector<double> reml_grid(const RemlSearch& search) {
    std::vector<double> grid(static_cast<std::size_t>(search.grid_points));
    const double step = (search.log10_upper - search.log10_lower) / (search.grid_points - 1);
    for (int i = 0; i < search.grid_points; ++i) grid[i] = search.log10_lower + i * step;
    grid.back() = search.log10_upper;
    return grid;
}

RemlSelection select_lambda_reml(const Subject& subject, Domain domain, const RemlSearch& search) {
    if (search.grid_points < 2 || !(search.log10_lower < search.log10_upper) ||
        !(search.tolerance > 0.0))
        throw ValidationError("invalid REML search settings");
    require_fit_input(subject, domain);

    // Reject y that a straight line reproduces exactly: sigma^2 would be 0.
    {
        const auto& t = subject.times;
        const auto& y = subject.values;
        const double n = static_cast<double>(t.size());
        double mt = 0.0, my = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            mt += t[i];
            my += y[i];
        }
        mt /= n;
        my /= n;
        double stt = 0.0, sty = 0.0, syy = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            stt += (t[i] - mt) * (t[i] - mt);
            sty += (t[i] - mt) * (y[i] - my);
            syy += (y[i] - my) * (y[i] - my);
        }
        const double slope = sty / stt;
        double rss = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const double r = y[i] - my - slope * (t[i] - mt);
            rss += r * r;
            scale += y[i] * y[i];
        }
        if (syy == 0.0 || rss <= 1e-24 * std::max(scale, 1e-300))
            throw NumericError("subject " + subject.id +
                               " is degenerate: values are constant or exactly linear in time "
                               "(zero residual variance), REML undefined");
    }

    RemlProfile profile(subject, domain);
    auto objective = [&](double log10_lambda) {
        return profile.at(std::pow(10.0, log10_lambda)).log_likelihood;
    };

    const std::vector<double> grid = reml_grid(search);
    std::size_t best = 0;
    double best_value = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = objective(grid[i]);
        if (v > best_value) {
            best_value = v;
            best = i;
        }
    }
    double best_x = grid[best];

    const double step = grid[1] - grid[0];
    double lo = std::max(search.log10_lower, best_x - step);
    double hi = std::min(search.log10_upper, best_x + step);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = objective(x1);
    double f2 = objective(x2);
    while (hi - lo > search.tolerance) {
        if (f1 >= f2) {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2);
        }
    }
    const double refined = 0.5 * (lo + hi);
    const double refined_value = objective(refined);
    if (refined_value > best_value) {
        best_value = refined_value;
        best_x = refined;
    }

    const double lambda = std::pow(10.0, best_x);
    const RemlPoint point = profile.at(lambda);
    RemlSelection sel;
    sel.lambda_hat = lambda;
    sel.sigma2_hat = point.sigma2;
    sel.sigma_u2_hat = point.sigma2 / (static_cast<double>(subject.size()) * lambda);
    sel.reml_value = point.log_likelihood;
    if (!(sel.sigma2_hat > 0.0) || !std::isfinite(sel.reml_value))
        throw NumericError("subject " + subject.id + ": REML produced a non-positive variance");
    return sel;
}

RemlSelection select_lambda_reml(const Subject& subject, const MixedModelParts& parts,
                                 const RemlSearch& search) {
    if (parts.times != subject.times)
        throw ValidationError("subject " + subject.id + ": mixed-model parts built for other times");
    return select_lambda_reml(subject, parts.domain, search);
}

}  // namespace spcdist
