#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "dblsim/linear.hpp"

using namespace dblsim;
using Catch::Approx;

TEST_CASE("identity and diagonal systems", "[linear]") {
    DenseMatrix a(3);
    a(0, 0) = a(1, 1) = a(2, 2) = 1.0;
    auto x = linear_solve(a, {3.0, -1.0, 0.5});
    CHECK(x[0] == 3.0);
    CHECK(x[1] == -1.0);
    CHECK(x[2] == 0.5);

    DenseMatrix b(2);
    b(0, 0) = 2.0;
    b(1, 1) = 4.0;
    auto y = linear_solve(b, {2.0, 4.0});
    CHECK(y[0] == Approx(1.0));
    CHECK(y[1] == Approx(1.0));
}

TEST_CASE("random diagonally dominant systems multiply back", "[linear]") {
    std::mt19937 rng(1234);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 10;
        DenseMatrix a(n);
        std::vector<double> b(n);
        for (int r = 0; r < n; ++r) {
            double offsum = 0.0;
            for (int c = 0; c < n; ++c) {
                if (r == c) continue;
                a(r, c) = u(rng);
                offsum += std::fabs(a(r, c));
            }
            a(r, r) = offsum + 1.0 + std::fabs(u(rng));
            b[static_cast<size_t>(r)] = u(rng) * 10.0;
        }
        const auto x = linear_solve(a, b);

        double bmax = 0.0, rmax = 0.0;
        for (int r = 0; r < n; ++r) {
            double ax = 0.0;
            for (int c = 0; c < n; ++c) ax += a(r, c) * x[static_cast<size_t>(c)];
            rmax = std::max(rmax, std::fabs(ax - b[static_cast<size_t>(r)]));
            bmax = std::max(bmax, std::fabs(b[static_cast<size_t>(r)]));
        }
        REQUIRE(rmax <= 1e-10 * bmax);
    }
}

TEST_CASE("pivoting handles zero diagonals", "[linear]") {
    DenseMatrix a(2);
    a(0, 0) = 0.0;
    a(0, 1) = 1.0;
    a(1, 0) = 1.0;
    a(1, 1) = 0.0;
    auto x = linear_solve(a, {2.0, 3.0});
    CHECK(x[0] == Approx(3.0));
    CHECK(x[1] == Approx(2.0));
}

TEST_CASE("singular matrices name the pivot", "[linear]") {
    DenseMatrix a(3);
    // row 2 = row 0, rank deficient
    a(0, 0) = 1.0; a(0, 1) = 2.0; a(0, 2) = 3.0;
    a(1, 0) = 0.0; a(1, 1) = 1.0; a(1, 2) = 1.0;
    a(2, 0) = 1.0; a(2, 1) = 2.0; a(2, 2) = 3.0;
    try {
        linear_solve(a, {1.0, 1.0, 1.0});
        FAIL("expected SingularMatrixError");
    } catch (const SingularMatrixError& e) {
        CHECK(e.pivot_index == 2);
    }
}
