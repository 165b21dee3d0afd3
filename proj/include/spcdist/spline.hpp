#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spcdist/dataset.hpp"

namespace spcdist {

/// Cubic piece on [knot, next knot): value, first, second and third
/// derivative at the left knot, i.e.
///   p(t) = value + d1*dt + d2*dt^2/2 + d3*dt^3/6.
struct CubicPiece {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
    double d3 = 0.0;

    double operator()(double dt) const {
        return value + dt * (d1 + dt * (0.5 * d2 + dt * d3 / 6.0));
    }
};

/// A fitted natural cubic smoothing spline.
///
/// `pieces[i]` covers [knots[i], knots[i+1]); the last entry is the linear
/// tail right of the final knot (d2 = d3 = 0). Left of the first knot the
/// curve continues linearly with the first piece's slope.
class SplineFit {
public:
    SplineFit() = default;
    SplineFit(std::string subject_id, std::vector<double> knots, std::vector<CubicPiece> pieces,
              double lambda, Domain domain);

    const std::string& subject_id() const { return subject_id_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<CubicPiece>& pieces() const { return pieces_; }
    double lambda() const { return lambda_; }
    const Domain& domain() const { return domain_; }

    /// Fitted values at the knots.
    std::vector<double> fitted_values() const;

    /// Index of the piece responsible for t: -1 left of the first knot,
    /// knots.size()-1 right of the last one. No domain check.
    std::ptrdiff_t locate(double t) const;

    /// Evaluates piece `index` (as returned by locate) at t.
    double evaluate_piece(std::ptrdiff_t index, double t) const;

private:
    std::string subject_id_;
    std::vector<double> knots_;
    std::vector<CubicPiece> pieces_;
    double lambda_ = 0.0;
    Domain domain_;
};

struct RemlSelection {
    double lambda_hat = 0.0;
    double sigma2_hat = 0.0;
    double sigma_u2_hat = 0.0;
    double reml_value = 0.0;
};

/// Dense pieces of the mixed-model form y = X beta + u + e with
/// cov(u) = sigma_u^2 R. Built for oracles and inspection; the fitting path
/// never forms these matrices.
struct MixedModelParts {
    Eigen::MatrixXd design_fixed;  // K x 2: ones, times
    Eigen::MatrixXd kernel_R;      // K x K
    std::vector<double> times;
    Domain domain;
};

/// Bounds and resolution of the REML search in log10(lambda).
struct RemlSearch {
    double log10_lower = -8.0;
    double log10_upper = 8.0;
    int grid_points = 33;
    double tolerance = 1e-3;
};

/// (T_U - T_L)^-2 * integral over the domain of (s - tau)_+ (t - tau)_+ dtau.
/// Throws ValidationError if s or t lies outside the domain.
double kernel_entry(double s, double t, double t_lower, double t_upper);

MixedModelParts build_mixed_model_parts(std::span<const double> times, Domain domain);

/// Natural cubic smoothing spline minimizing
///   (1/K) |y - f|^2 + lambda * (T_U - T_L)^2 * integral (f'')^2,
/// the penalized form of the mixed model with kernel_entry as covariance
/// (K*lambda = sigma^2 / sigma_u^2). On a unit-length domain this is the
/// textbook (1/K)|y - f|^2 + lambda * integral (f'')^2.
/// O(K) time and memory via a pentadiagonal Reinsch system.
SplineFit fit_given_lambda(const Subject& subject, double lambda, Domain domain);

/// Evaluates the fit; throws ValidationError outside the fit's domain.
double evaluate(const SplineFit& fit, double t);

/// Profiled restricted log-likelihood at one lambda, O(K).
struct RemlPoint {
    double log_likelihood = 0.0;
    double sigma2 = 0.0;
};

/// Precomputed per-subject quantities for repeated REML evaluations.
class RemlProfile {
public:
    RemlProfile(const Subject& subject, Domain domain);

    RemlPoint at(double lambda) const;
    std::size_t size() const { return times_.size(); }

private:
    std::vector<double> times_;
    std::vector<double> y_;
    std::vector<double> h_;
    std::vector<double> qty_;                       // Q'y
    std::vector<double> qtq0_, qtq1_, qtq2_;        // bands of Q'Q
    std::vector<double> rb0_, rb1_;                 // bands of the tridiagonal R
    double length_sq_ = 1.0;
    double log_det_qtq_ = 0.0;
    double log_det_xtx_ = 0.0;
};

/// Selects lambda by REML: coarse grid over log10(lambda), then golden-section
/// refinement around the best grid point. Throws NumericError if y has no
/// variation beyond a straight line.
RemlSelection select_lambda_reml(const Subject& subject, Domain domain,
                                 const RemlSearch& search = {});

/// Same as above with parts built for this subject; checks that they match.
RemlSelection select_lambda_reml(const Subject& subject, const MixedModelParts& parts,
                                 const RemlSearch& search = {});

/// log10(lambda) grid used by the coarse REML stage.
std::vector<double> reml_grid(const RemlSearch& search = {});

}  // namespace spcdist
