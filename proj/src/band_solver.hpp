#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace spcdist::detail {

/// Symmetric pentadiagonal matrix stored by bands: diag[i] = A(i,i),
/// off1[i] = A(i,i+1), off2[i] = A(i,i+2).
struct PentaBands {
    std::vector<double> diag;
    std::vector<double> off1;
    std::vector<double> off2;

    explicit PentaBands(std::size_t n = 0) : diag(n, 0.0), off1(n, 0.0), off2(n, 0.0) {}
    std::size_t size() const { return diag.size(); }
};

/// LDL^T factorization of a symmetric positive definite pentadiagonal matrix.
class PentaLdlt {
public:
    /// Returns the row at which a nonpositive pivot appeared, if any.
    std::optional<std::size_t> factor(const PentaBands& a);

    /// Solves A x = b in place.
    void solve_in_place(std::vector<double>& b) const;

    double log_determinant() const;

private:
    std::vector<double> d_;
    std::vector<double> l1_;
    std::vector<double> l2_;
};

}  // namespace spcdist::detail
