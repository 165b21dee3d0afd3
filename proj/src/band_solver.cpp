#include "band_solver.hpp"

#include <cmath>

namespace spcdist::detail {

std::optional<std::size_t> PentaLdlt::factor(const PentaBands& a) {
    const std::size_t n = a.size();
    d_.assign(n, 0.0);
    l1_.assign(n, 0.0);
    l2_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double pivot = a.diag[i];
        if (i >= 1) pivot -= l1_[i - 1] * l1_[i - 1] * d_[i - 1];
        if (i >= 2) pivot -= l2_[i - 2] * l2_[i - 2] * d_[i - 2];
        if (!(pivot > 1e-14 * std::abs(a.diag[i])) || !std::isfinite(pivot)) return i;
        d_[i] = pivot;
        if (i + 1 < n) {
            double v = a.off1[i];
            if (i >= 1) v -= l2_[i - 1] * l1_[i - 1] * d_[i - 1];
            l1_[i] = v / pivot;
        }
        if (i + 2 < n) l2_[i] = a.off2[i] / pivot;
    }
    return std::nullopt;
}

void PentaLdlt::solve_in_place(std::vector<double>& b) const {
    const std::size_t n = d_.size();
    for (std::size_t i = 1; i < n; ++i) {
        b[i] -= l1_[i - 1] * b[i - 1];
        if (i >= 2) b[i] -= l2_[i - 2] * b[i - 2];
    }
    for (std::size_t i = 0; i < n; ++i) b[i] /= d_[i];
    for (std::size_t i = n; i-- > 0;) {
        if (i + 1 < n) b[i] -= l1_[i] * b[i + 1];
        if (i + 2 < n) b[i] -= l2_[i] * b[i + 2];
    }
}

double PentaLdlt::log_determinant() const {
    double s = 0.0;
    for (double d : d_) s += std::log(d);
    return s;
}

}  // namespace spcdist::detail
