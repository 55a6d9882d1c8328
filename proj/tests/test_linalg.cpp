#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "dmp/linalg.hpp"

using namespace dmp;

namespace {

Matrix appendix_a_block() {
    Matrix a(3, 3);
    a(0, 0) = 4;  a(0, 1) = -1; a(0, 2) = -1;
    a(1, 0) = -1; a(1, 1) = 4;  a(1, 2) = 0;
    a(2, 0) = -1; a(2, 1) = 0;  a(2, 2) = 4;
    return a;
}

Matrix appendix_c0() {
    Matrix c(3, 3);
    c(0, 0) = 1.5;  c(0, 1) = -1.0;  c(0, 2) = -1.0;
    c(1, 0) = -1.0; c(1, 1) = 1.25;  c(1, 2) = 0.25;
    c(2, 0) = -1.0; c(2, 1) = 0.25;  c(2, 2) = 1.25;
    return c;
}

}  // namespace

TEST_CASE("invert: identity and the 3x3 blocks with known exact inverses") {
    const Matrix id = Matrix::identity(4);
    CHECK(max_abs_diff(invert(id).inverse, id) == 0.0);

    const InverseResult a_inv = invert(appendix_a_block());
    const double expected_a[3][3] = {{2.0 / 7, 1.0 / 14, 1.0 / 14},
                                     {1.0 / 14, 15.0 / 56, 1.0 / 56},
                                     {1.0 / 14, 1.0 / 56, 15.0 / 56}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(a_inv.inverse(i, j) == Catch::Approx(expected_a[i][j]).margin(1e-12));
    CHECK(a_inv.residual_max < 1e-14);

    const Matrix c0_inv = invert(appendix_c0()).inverse;
    const double expected_c[3][3] = {{6, 4, 4}, {4, 3.5, 2.5}, {4, 2.5, 3.5}};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(c0_inv(i, j) == Catch::Approx(expected_c[i][j]).margin(1e-12));
}

TEST_CASE("invert rejects singular matrices") {
    Matrix s(2, 2);
    s(0, 0) = 1.0; s(0, 1) = 2.0;
    s(1, 0) = 2.0; s(1, 1) = 4.0;
    CHECK_THROWS_AS(invert(s), NumericalError);
}

TEST_CASE("submatrix preserves given index order") {
    Matrix b(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) b(i, j) = 10.0 * i + j;
    const std::vector<int> all_r{0, 1, 2}, all_c{0, 1, 2, 3};
    CHECK(max_abs_diff(submatrix(b, all_r, all_c), b) == 0.0);

    const std::vector<int> rows{2, 0}, cols{3, 1};
    const Matrix s = submatrix(b, rows, cols);
    CHECK(s(0, 0) == 23.0);
    CHECK(s(0, 1) == 21.0);
    CHECK(s(1, 0) == 3.0);
    CHECK(s(1, 1) == 1.0);

    const std::vector<int> bad{4};
    CHECK_THROWS_AS(submatrix(b, bad, all_c), std::out_of_range);
}

TEST_CASE("sign_test verdicts and margins") {
    const Matrix id = Matrix::identity(3);
    CHECK(sign_test(id, SignMode::Positive).verdict == SignVerdict::Indefinite);
    CHECK(sign_test(id, SignMode::Nonnegative).verdict == SignVerdict::Nonnegative);

    const SignReport pos = sign_test(invert(appendix_a_block()).inverse, SignMode::Positive);
    CHECK(pos.verdict == SignVerdict::StrictlyPositive);
    CHECK(pos.min_entry == Catch::Approx(1.0 / 56).margin(1e-14));

    const Matrix zero(2, 2);
    CHECK(sign_test(zero, SignMode::Nonpositive).verdict == SignVerdict::Nonpositive);
    CHECK(sign_test(zero, SignMode::Negative).verdict == SignVerdict::Indefinite);
}

TEST_CASE("sign_test monotone in tolerance for the non-strict modes") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 40; ++trial) {
        Matrix b(4, 4);
        for (double& v : b.a) v = u(rng) * ((rng() % 3 == 0) ? 1e-13 : 1.0);
        for (SignMode mode : {SignMode::Nonnegative, SignMode::Nonpositive}) {
            bool passed_before = false;
            for (double tol : {0.0, 1e-14, 1e-12, 1e-8, 1e-2, 10.0}) {
                const bool passed = sign_test(b, mode, tol).passed(mode);
                if (passed_before) CHECK(passed);  // widening tau never un-passes
                passed_before = passed;
            }
        }
    }
}

TEST_CASE("invert(invert(B)) recovers well-conditioned B") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 7);
        Matrix b(n, n);
        for (double& v : b.a) v = u(rng);
        for (int i = 0; i < n; ++i) b(i, i) += n;  // diagonally dominant, condition far below 1e8
        const Matrix twice = invert(invert(b).inverse).inverse;
        CHECK(max_abs_diff(twice, b) / max_abs(b) < 1e-10);
    }
}

TEST_CASE("cholesky succeeds exactly on SPD matrices") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix g(5, 5);
    for (double& v : g.a) v = u(rng);
    const Matrix spd = g * transpose(g) + 0.5 * Matrix::identity(5);
    const Matrix l = cholesky_factor(spd);
    for (int i = 0; i < 5; ++i) CHECK(l(i, i) > 0.0);
    CHECK(max_abs_diff(l * transpose(l), spd) < 1e-12);

    Matrix indef = Matrix::identity(3);
    indef(2, 2) = -1.0;
    CHECK_THROWS_AS(cholesky_factor(indef), NumericalError);
}

TEST_CASE("symmetric eigenvalues: known spectra") {
    Matrix d(3, 3);
    d(0, 0) = 3.0; d(1, 1) = -1.0; d(2, 2) = 0.5;
    const std::vector<double> ev = symmetric_eigenvalues(d);
    CHECK(ev[0] == Catch::Approx(-1.0).margin(1e-13));
    CHECK(ev[1] == Catch::Approx(0.5).margin(1e-13));
    CHECK(ev[2] == Catch::Approx(3.0).margin(1e-13));

    // [[2,1],[1,2]] has eigenvalues 1 and 3
    Matrix s(2, 2);
    s(0, 0) = 2; s(0, 1) = 1; s(1, 0) = 1; s(1, 1) = 2;
    const std::vector<double> ev2 = symmetric_eigenvalues(s);
    CHECK(ev2[0] == Catch::Approx(1.0).margin(1e-13));
    CHECK(ev2[1] == Catch::Approx(3.0).margin(1e-13));
}

TEST_CASE("lu_solve: residual at round-off on random systems") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 3 + static_cast<int>(rng() % 20);
        Matrix b(n, n);
        for (double& v : b.a) v = u(rng);
        for (int i = 0; i < n; ++i) b(i, i) += 2.0 * n;
        std::vector<double> rhs(n);
        for (double& v : rhs) v = u(rng);
        const std::vector<double> x = lu_solve(lu_factor(b), rhs);
        const std::vector<double> bx = matvec(b, x);
        for (int i = 0; i < n; ++i) CHECK(std::abs(bx[i] - rhs[i]) < 1e-11 * n);
    }
}
