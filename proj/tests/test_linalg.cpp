#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "sofctl/error.hpp"
#include "sofctl/linalg.hpp"

using namespace sofctl;

namespace {

Matrix random_matrix(Index r, Index c, std::mt19937_64& rng) {
    std::normal_distribution<double> d;
    Matrix m(r, c);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) = d(rng);
    return m;
}

}  // namespace

TEST_CASE("sym_eig on diagonal and swap matrices") {
    Matrix d(2, 2);
    d << 3, 0, 0, 1;
    auto e = sym_eig(d);
    CHECK(e.values(0) == doctest::Approx(1.0));
    CHECK(e.values(1) == doctest::Approx(3.0));
    CHECK(std::abs(e.vectors(1, 0)) == doctest::Approx(1.0));

    Matrix s(2, 2);
    s << 0, 1, 1, 0;
    e = sym_eig(s);
    CHECK(e.values(0) == doctest::Approx(-1.0));
    CHECK(e.values(1) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix a = random_matrix(5, 5, rng);
        const Matrix s = symmetrize(a);
        const auto e = sym_eig(s);
        const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
        CHECK((rec - s).norm() <= 1e-10 * (1.0 + s.norm()));
        CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(5, 5)).norm() < 1e-12);
        for (Index i = 1; i < 5; ++i) CHECK(e.values(i - 1) <= e.values(i));
    }
}

TEST_CASE("sym_eig rejects bad input") {
    CHECK_THROWS_AS(sym_eig(Matrix::Zero(2, 3)), DimensionError);
    Matrix a(2, 2);
    a << 1, 2, 0, 1;
    CHECK_THROWS_AS(sym_eig(a), DimensionError);
}

TEST_CASE("general_eig on rotation and triangular matrices") {
    Matrix rot(2, 2);
    rot << 0, 1, -1, 0;
    auto sp = general_eig(rot);
    REQUIRE(sp.size() == 2);
    for (const auto& z : sp) {
        CHECK(std::abs(z.real()) < 1e-12);
        CHECK(std::abs(std::abs(z.imag()) - 1.0) < 1e-12);
    }
    CHECK(spectral_abscissa(rot) == doctest::Approx(0.0).epsilon(1e-12));

    Matrix tri(3, 3);
    tri << 1, 2, 3, 0, -4, 5, 0, 0, 6;
    sp = general_eig(tri);
    std::vector<double> re;
    for (const auto& z : sp) re.push_back(z.real());
    std::sort(re.begin(), re.end());
    CHECK(re[0] == doctest::Approx(-4.0));
    CHECK(re[1] == doctest::Approx(1.0));
    CHECK(re[2] == doctest::Approx(6.0));
    CHECK_THROWS_AS(general_eig(Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("general_eig satisfies the characteristic polynomial") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = random_matrix(4, 4, rng);
        const auto sp = general_eig(a);
        REQUIRE(sp.size() == 4);
        const Eigen::MatrixXcd ac = a.cast<std::complex<double>>();
        for (const auto& z : sp) {
            // Smallest singular value of A - zI vanishes at an eigenvalue.
            const Eigen::MatrixXcd shifted = ac - z * Eigen::MatrixXcd::Identity(4, 4);
            Eigen::JacobiSVD<Eigen::MatrixXcd> svd(shifted);
            CHECK(svd.singularValues()(3) < 1e-10 * (1.0 + a.norm()));
        }
        // Conjugate pairs.
        for (const auto& z : sp) {
            if (std::abs(z.imag()) < 1e-12) continue;
            bool found = false;
            for (const auto& w : sp) found = found || std::abs(w - std::conj(z)) < 1e-10;
            CHECK(found);
        }
    }
}

TEST_CASE("spectral abscissa is similarity invariant") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix a = random_matrix(4, 4, rng);
        const Matrix t = random_matrix(4, 4, rng) + 4.0 * Matrix::Identity(4, 4);
        const Matrix b = t * a * t.inverse();
        CHECK(std::abs(spectral_abscissa(a) - spectral_abscissa(b)) < 1e-7);
    }
    CHECK(spectral_abscissa(-Matrix::Identity(3, 3)) == doctest::Approx(-1.0));
}

TEST_CASE("psd_sqrt squares back") {
    std::mt19937_64 rng(5);
    const Matrix g = random_matrix(4, 2, rng);
    const Matrix s = g * g.transpose();
    const Matrix r = psd_sqrt(s);
    CHECK((r * r - s).norm() < 1e-10 * (1.0 + s.norm()));
    CHECK(relative_asymmetry(r) < 1e-14);
    CHECK_THROWS(psd_sqrt(-Matrix::Identity(2, 2)));
}

TEST_CASE("linear solves, rank and pseudo-inverse") {
    Matrix a(2, 2);
    a << 2, 1, 1, 3;
    Matrix b(2, 1);
    b << 3, 5;
    const Matrix x = solve_linear(a, b);
    CHECK((a * x - b).norm() < 1e-14);
    CHECK_THROWS_AS(solve_linear(Matrix::Zero(2, 2), b), NumericalError);

    Matrix low(3, 3);
    low << 1, 2, 3, 2, 4, 6, 1, 0, 1;
    CHECK(numerical_rank(low) == 2);
    CHECK(numerical_rank(Matrix::Identity(4, 4)) == 4);
    const Matrix pinv = pseudo_inverse(low);
    CHECK((low * pinv * low - low).norm() < 1e-12);
    CHECK((pinv * low * pinv - pinv).norm() < 1e-12);
    CHECK(rcond_estimate(Matrix::Identity(3, 3)) == doctest::Approx(1.0));
}

TEST_CASE("unit and block-diagonal helpers") {
    const Matrix e = unit_matrix(2, 3, 1, 2);
    CHECK(e.sum() == 1.0);
    CHECK(e(1, 2) == 1.0);
    const Matrix bd = block_diag(Matrix::Identity(2, 2), 3.0 * Matrix::Ones(1, 1));
    CHECK(bd.rows() == 3);
    CHECK(bd(2, 2) == 3.0);
    CHECK(bd(0, 2) == 0.0);
}
