// Slow, direct reference implementations used only by the test suites.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spcdist/dataset.hpp"
#include "spcdist/distance.hpp"
#include "spcdist/spline.hpp"

namespace oracle {

inline spcdist::Subject random_subject(std::mt19937_64& rng, std::size_t k, const std::string& id,
                                       double lo = 0.0, double hi = 1.0) {
    // Jittered grid: irregular spacing without near-coincident times.
    std::uniform_real_distribution<double> jitter(-0.4, 0.4);
    std::normal_distribution<double> z(0.0, 1.0);
    spcdist::Subject s{id, {}, {}};
    for (std::size_t i = 0; i < k; ++i)
        s.times.push_back(lo + (hi - lo) * (static_cast<double>(i) + 0.5 + jitter(rng)) / static_cast<double>(k));
    for (double t : s.times) s.values.push_back(std::sin(5.0 * t) + 0.3 * z(rng));
    return s;
}

// Band matrices Q (K x K-2) and R (K-2 x K-2) of the roughness penalty,
// integral f''^2 = f' Q R^-1 Q' f for the natural interpolant of f.
inline void roughness_parts(const std::vector<double>& t, Eigen::MatrixXd& Q, Eigen::MatrixXd& R) {
    const Eigen::Index k = static_cast<Eigen::Index>(t.size());
    Q = Eigen::MatrixXd::Zero(k, k - 2);
    R = Eigen::MatrixXd::Zero(k - 2, k - 2);
    for (Eigen::Index j = 1; j < k - 1; ++j) {
        const double h0 = t[j] - t[j - 1];
        const double h1 = t[j + 1] - t[j];
        Q(j - 1, j - 1) = 1.0 / h0;
        Q(j, j - 1) = -1.0 / h0 - 1.0 / h1;
        Q(j + 1, j - 1) = 1.0 / h1;
        R(j - 1, j - 1) = (h0 + h1) / 3.0;
        if (j < k - 2) {
            R(j - 1, j) = h1 / 6.0;
            R(j, j - 1) = h1 / 6.0;
        }
    }
}

inline Eigen::MatrixXd roughness_matrix(const std::vector<double>& t) {
    Eigen::MatrixXd Q, R;
    roughness_parts(t, Q, R);
    return Q * R.ldlt().solve(Q.transpose());
}

// Minimizer of (1/K)|y - f|^2 + lambda * L^2 * f' Omega f, by a dense solve.
inline std::vector<double> dense_fit(const spcdist::Subject& s, double lambda, spcdist::Domain d) {
    const Eigen::Index k = static_cast<Eigen::Index>(s.size());
    const double alpha = static_cast<double>(k) * lambda * d.length() * d.length();
    Eigen::MatrixXd A = Eigen::MatrixXd::Identity(k, k) + alpha * roughness_matrix(s.times);
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.values.data(), k);
    Eigen::VectorXd f = A.partialPivLu().solve(y);
    return {f.data(), f.data() + k};
}

inline double kernel(double s, double t, double lo, double hi) {
    // (hi-lo)^-2 * int_lo^hi (s - u)_+ (t - u)_+ du, by exact antiderivative.
    const double m = std::min(s, t) - lo;
    const double big = std::max(s, t) - lo;
    const double integral = big * m * m / 2.0 - m * m * m / 6.0;
    return integral / ((hi - lo) * (hi - lo));
}

// Fitted values as the BLUP of y = X beta + u + e with cov(u) = sigma_u^2 R,
// sigma^2 / sigma_u^2 = K * lambda.
inline std::vector<double> blup_fit(const spcdist::Subject& s, double lambda, spcdist::Domain d) {
    const Eigen::Index k = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd X(k, 2), Rk(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = s.times[i];
        for (Eigen::Index j = 0; j < k; ++j) Rk(i, j) = kernel(s.times[i], s.times[j], d.lower, d.upper);
    }
    const double ratio = static_cast<double>(k) * lambda;
    Eigen::MatrixXd V = ratio * Eigen::MatrixXd::Identity(k, k) + Rk;
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.values.data(), k);
    auto lu = V.partialPivLu();
    Eigen::MatrixXd ViX = lu.solve(X);
    Eigen::VectorXd beta = (X.transpose() * ViX).ldlt().solve(ViX.transpose() * y);
    Eigen::VectorXd r = y - X * beta;
    Eigen::VectorXd f = X * beta + Rk * lu.solve(r);
    return {f.data(), f.data() + k};
}

// Profiled restricted log-likelihood evaluated from the eigendecomposition of
// the kernel matrix: H = I + Rk / (K lambda) = U (I + D / (K lambda)) U'.
inline double dense_reml(const spcdist::Subject& s, double lambda, spcdist::Domain d) {
    const Eigen::Index k = static_cast<Eigen::Index>(s.size());
    Eigen::MatrixXd X(k, 2), Rk(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        X(i, 0) = 1.0;
        X(i, 1) = s.times[i];
        for (Eigen::Index j = 0; j < k; ++j) Rk(i, j) = kernel(s.times[i], s.times[j], d.lower, d.upper);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Rk);
    Eigen::VectorXd h = (eig.eigenvalues().array().max(0.0) / (static_cast<double>(k) * lambda)) + 1.0;
    const Eigen::MatrixXd& U = eig.eigenvectors();
    Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(s.values.data(), k);
    Eigen::MatrixXd Xt = U.transpose() * X;
    Eigen::VectorXd yt = U.transpose() * y;
    Eigen::MatrixXd HiXt = Xt.array().colwise() / h.array();
    Eigen::VectorXd Hiyt = yt.array() / h.array();
    Eigen::Matrix2d XtHiX = Xt.transpose() * HiXt;
    Eigen::Vector2d XtHiy = Xt.transpose() * Hiyt;
    const double yPy = yt.dot(Hiyt) - XtHiy.dot(XtHiX.ldlt().solve(XtHiy));
    const double dof = static_cast<double>(k - 2);
    const double sigma2 = yPy / dof;
    const double logdet = h.array().log().sum() + std::log(XtHiX.determinant());
    return -0.5 * (dof * (std::log(2.0 * std::numbers::pi * sigma2) + 1.0) + logdet);
}

// Evaluates a fit from its piece coefficients in monomial form.
inline double eval_pieces(const spcdist::SplineFit& fit, double t) {
    const auto& knots = fit.knots();
    const auto& pieces = fit.pieces();
    if (t < knots.front()) {
        const auto& p = pieces.front();
        return p.value + p.d1 * (t - knots.front());
    }
    std::size_t i = 0;
    while (i + 1 < knots.size() && knots[i + 1] <= t) ++i;
    const auto& p = pieces[i];
    const double x = t - knots[i];
    return p.value + p.d1 * x + p.d2 * x * x / 2.0 + p.d3 * x * x * x / 6.0;
}

// Midpoint Riemann sum of (a - b)^2 with n cells; square root of the result.
inline double riemann_l2(const spcdist::SplineFit& a, const spcdist::SplineFit& b, double lo, double hi,
                         std::size_t n) {
    const double h = (hi - lo) / static_cast<double>(n);
    // Walk both knot sequences alongside t instead of searching each time.
    const auto& ka = a.knots();
    const auto& kb = b.knots();
    std::size_t ia = 0, ib = 0;
    long double sum = 0.0L;
    for (std::size_t c = 0; c < n; ++c) {
        const double t = lo + (static_cast<double>(c) + 0.5) * h;
        while (ia + 1 < ka.size() && ka[ia + 1] <= t) ++ia;
        while (ib + 1 < kb.size() && kb[ib + 1] <= t) ++ib;
        auto piece_value = [t](const spcdist::SplineFit& f, std::size_t i) {
            const auto& knots = f.knots();
            const auto& p = f.pieces();
            if (t < knots.front()) return p.front().value + p.front().d1 * (t - knots.front());
            const double x = t - knots[i];
            return p[i].value + x * (p[i].d1 + x * (p[i].d2 / 2.0 + x * p[i].d3 / 6.0));
        };
        const double diff = piece_value(a, ia) - piece_value(b, ib);
        sum += static_cast<long double>(diff) * diff;
    }
    return std::sqrt(static_cast<double>(sum * h));
}

// Exhaustive best medoid set cost over all k-subsets.
inline double exhaustive_pam_cost(const spcdist::DissimilarityMatrix& m, std::size_t k) {
    const std::size_t n = m.size();
    std::vector<bool> pick(n, false);
    std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(k), true);
    double best = std::numeric_limits<double>::infinity();
    do {
        double cost = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double nearest = std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < n; ++j)
                if (pick[j]) nearest = std::min(nearest, m(i, j));
            cost += nearest;
        }
        best = std::min(best, cost);
    } while (std::prev_permutation(pick.begin(), pick.end()));
    return best;
}

inline spcdist::DissimilarityMatrix random_euclidean_matrix(std::mt19937_64& rng, std::size_t n,
                                                            std::size_t dim = 2) {
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<std::vector<double>> pts(n, std::vector<double>(dim));
    for (auto& p : pts)
        for (auto& x : p) x = z(rng);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("p" + std::to_string(i));
    spcdist::DissimilarityMatrix m(ids);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t c = 0; c < dim; ++c) s += (pts[i][c] - pts[j][c]) * (pts[i][c] - pts[j][c]);
            m.set_symmetric(i, j, std::sqrt(s));
        }
    return m;
}

// Weighted affine loss at (a, b) over ordered pairs.
inline double q_at(const spcdist::DissimilarityMatrix& est, const spcdist::DissimilarityMatrix& truth,
                   double a, double b) {
    double q = 0.0;
    for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t j = 0; j < est.size(); ++j)
            if (i != j) {
                const double r = a + b * est(i, j) - truth(i, j);
                q += r * r / truth(i, j);
            }
    return q;
}

// Minimum of q_at by repeatedly zooming a square grid onto its best node.
inline double q_grid_search(const spcdist::DissimilarityMatrix& est, const spcdist::DissimilarityMatrix& truth) {
    double ca = 0.0, cb = 1.0, half = 50.0;
    double best = q_at(est, truth, ca, cb);
    for (int round = 0; round < 80; ++round) {
        double na = ca, nb = cb;
        for (int i = -10; i <= 10; ++i)
            for (int j = -10; j <= 10; ++j) {
                const double a = ca + half * i / 10.0;
                const double b = cb + half * j / 10.0;
                const double q = q_at(est, truth, a, b);
                if (q < best) {
                    best = q;
                    na = a;
                    nb = b;
                }
            }
        ca = na;
        cb = nb;
        half *= 0.5;
    }
    return best;
}

// Ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
inline double naive_r(const spcdist::DissimilarityMatrix& est, const spcdist::DissimilarityMatrix& truth) {
    std::vector<double> e, t;
    for (std::size_t i = 0; i < est.size(); ++i)
        for (std::size_t j = i + 1; j < est.size(); ++j) {
            e.push_back(est(i, j));
            t.push_back(truth(i, j));
        }
    auto rank = [](const std::vector<double>& v, std::size_t p) {
        double less = 0.0, equal = 0.0;
        for (double x : v) {
            if (x < v[p]) less += 1.0;
            if (x == v[p]) equal += 1.0;
        }
        return 1.0 + less + (equal - 1.0) / 2.0;
    };
    double r = 0.0;
    for (std::size_t p = 0; p < e.size(); ++p) {
        const double diff = rank(e, p) - rank(t, p);
        r += 2.0 * diff * diff;
    }
    return r;
}

inline std::vector<double> naive_knn(const spcdist::DissimilarityMatrix& m, std::size_t k) {
    std::vector<double> out;
    for (std::size_t i = 0; i < m.size(); ++i) {
        std::vector<double> row;
        for (std::size_t j = 0; j < m.size(); ++j)
            if (j != i) row.push_back(m(i, j));
        std::sort(row.begin(), row.end());
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += row[c];
        out.push_back(s / static_cast<double>(k));
    }
    return out;
}

}  // namespace oracle
