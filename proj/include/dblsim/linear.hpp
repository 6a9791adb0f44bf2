#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace dblsim {

struct SingularMatrixError : std::runtime_error {
    int pivot_index;
    explicit SingularMatrixError(int k)
        : std::runtime_error("singular matrix: pivot " + std::to_string(k) +
                             " below threshold"),
          pivot_index(k) {}
};

/// Dense row-major square matrix. Desk scale: a few hundred unknowns.
class DenseMatrix {
public:
    DenseMatrix() = default;
    explicit DenseMatrix(int n) : n_(n), a_(static_cast<size_t>(n) * n, 0.0) {}

    int size() const { return n_; }
    double& operator()(int r, int c) { return a_[static_cast<size_t>(r) * n_ + c]; }
    double operator()(int r, int c) const {
        return a_[static_cast<size_t>(r) * n_ + c];
    }
    void zero() { std::fill(a_.begin(), a_.end(), 0.0); }

private:
    int n_ = 0;
    std::vector<double> a_;
};

/// LU with partial pivoting. A pivot below 1e-13 times the largest entry
/// of the input matrix throws SingularMatrixError naming the pivot index.
inline std::vector<double> linear_solve(DenseMatrix a, std::vector<double> b) {
    const int n = a.size();
    if (static_cast<size_t>(n) != b.size())
        throw std::invalid_argument("linear_solve: dimension mismatch");
    if (n == 0) return {};

    double max_entry = 0.0;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) max_entry = std::max(max_entry, std::fabs(a(r, c)));
    const double threshold = 1e-13 * max_entry;

    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;

    for (int k = 0; k < n; ++k) {
        int piv = k;
        for (int r = k + 1; r < n; ++r)
            if (std::fabs(a(r, k)) > std::fabs(a(piv, k))) piv = r;
        if (!(std::fabs(a(piv, k)) > threshold)) throw SingularMatrixError(k);
        if (piv != k) {
            for (int c = 0; c < n; ++c) std::swap(a(k, c), a(piv, c));
            std::swap(perm[k], perm[piv]);
        }
        const double d = a(k, k);
        for (int r = k + 1; r < n; ++r) {
            const double m = a(r, k) / d;
            a(r, k) = m;
            if (m == 0.0) continue;
            for (int c = k + 1; c < n; ++c) a(r, c) -= m * a(k, c);
        }
    }

    // Ly = Pb, then Ux = y.
    std::vector<double> x(n);
    for (int r = 0; r < n; ++r) {
        double s = b[perm[r]];
        for (int c = 0; c < r; ++c) s -= a(r, c) * x[c];
        x[r] = s;
    }
    for (int r = n - 1; r >= 0; --r) {
        double s = x[r];
        for (int c = r + 1; c < n; ++c) s -= a(r, c) * x[c];
        x[r] = s / a(r, r);
    }
    return x;
}

}  // namespace dblsim
