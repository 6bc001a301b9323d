#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "sofctl/error.hpp"
#include "sofctl/lmi.hpp"

using namespace sofctl;

namespace {

// max alpha s.t. diag(1, 2) - alpha I >= 0
LinearMatrixExpr diag_problem() {
    LinearMatrixExpr e(1);
    Matrix g0(2, 2);
    g0 << 1, 0, 0, 2;
    const auto b = e.add_block(g0);
    e.set_coefficient(b, 0, -Matrix::Identity(2, 2));
    return e;
}

// max x s.t. [[1, x], [x, 1]] >= 0
LinearMatrixExpr offdiag_problem() {
    LinearMatrixExpr e(1);
    const auto b = e.add_block(Matrix::Identity(2, 2));
    Matrix g(2, 2);
    g << 0, 1, 1, 0;
    e.set_coefficient(b, 0, g);
    return e;
}

}  // namespace

TEST_CASE("eval_lmi is affine") {
    auto e = offdiag_problem();
    e.append_variables(1);
    e.set_coefficient(0, 1, Matrix::Identity(2, 2));
    std::mt19937_64 rng(1);
    std::normal_distribution<double> d;
    for (int k = 0; k < 5; ++k) {
        Vector x(2), y(2);
        x << d(rng), d(rng);
        y << d(rng), d(rng);
        const double a = d(rng);
        const Matrix g0 = eval_lmi(e, Vector::Zero(2))[0];
        const Matrix lhs = eval_lmi(e, a * x + (1 - a) * y)[0];
        const Matrix rhs = a * eval_lmi(e, x)[0] + (1 - a) * eval_lmi(e, y)[0];
        CHECK((lhs - rhs).norm() < 1e-12 * (1 + g0.norm()));
    }
}

TEST_CASE("LinearMatrixExpr validation") {
    LinearMatrixExpr e(1);
    const auto b = e.add_block(Matrix::Identity(2, 2));
    CHECK_THROWS(e.set_coefficient(b, 0, Matrix::Identity(3, 3)));
    CHECK_THROWS(e.set_coefficient(b, 5, Matrix::Identity(2, 2)));
    CHECK(e.total_dimension() == 2);
}

TEST_CASE("SDP toy: max alpha under diag(1,2) - alpha I") {
    const auto e = diag_problem();
    Vector c(1);
    c << 1.0;
    const auto sol = solve_sdp(e, c, true);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.objective - 1.0) <= 1e-7);
    CHECK(lmi_min_eig(e, sol.x) >= -1e-8);
    // Objective history is monotone in the maximization sense.
    for (std::size_t i = 1; i < sol.objective_history.size(); ++i) {
        CHECK(sol.objective_history[i] >= sol.objective_history[i - 1] - 1e-9);
    }
}

TEST_CASE("SDP toy: max x under [[1,x],[x,1]]") {
    const auto e = offdiag_problem();
    Vector c(1);
    c << 1.0;
    auto sol = solve_sdp(e, c, true);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.objective - 1.0) <= 1e-7);
    CHECK(lmi_min_eig(e, sol.x) >= -1e-8);
    sol = solve_sdp(e, c, false);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.objective + 1.0) <= 1e-7);
}

TEST_CASE("SDP phase 1 from an infeasible start") {
    // x >= 3 and x <= 5, max x.
    LinearMatrixExpr e(1);
    const auto b1 = e.add_block(-3.0 * Matrix::Ones(1, 1));
    e.set_coefficient(b1, 0, Matrix::Ones(1, 1));
    const auto b2 = e.add_block(5.0 * Matrix::Ones(1, 1));
    e.set_coefficient(b2, 0, -Matrix::Ones(1, 1));
    Vector c(1);
    c << 1.0;
    const auto sol = solve_sdp(e, c, true);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.objective - 5.0) <= 1e-7);
}

TEST_CASE("SDP detects infeasibility") {
    // x >= 1 and x <= -1
    LinearMatrixExpr e(1);
    const auto b1 = e.add_block(-Matrix::Ones(1, 1));
    e.set_coefficient(b1, 0, Matrix::Ones(1, 1));
    const auto b2 = e.add_block(-Matrix::Ones(1, 1));
    e.set_coefficient(b2, 0, -Matrix::Ones(1, 1));
    Vector c(1);
    c << 1.0;
    const auto sol = solve_sdp(e, c, true);
    CHECK(sol.status == SdpStatus::Infeasible);
}

TEST_CASE("SDP reports an unbounded objective as a failure") {
    LinearMatrixExpr e(1);
    const auto b = e.add_block(Matrix::Ones(1, 1));
    e.set_coefficient(b, 0, Matrix::Ones(1, 1));  // 1 + x >= 0, max x unbounded
    Vector c(1);
    c << 1.0;
    const auto sol = solve_sdp(e, c, true);
    CHECK(sol.status != SdpStatus::Optimal);
}

TEST_CASE("strictness margin shifts the optimum") {
    const auto e = diag_problem();
    Vector c(1);
    c << 1.0;
    SdpSettings s;
    s.strictness_margin = 0.25;
    const auto sol = solve_sdp(e, c, true, std::nullopt, s);
    REQUIRE(sol.status == SdpStatus::Optimal);
    CHECK(std::abs(sol.objective - 0.75) <= 1e-7);
}

TEST_CASE("packed symmetric helpers") {
    CHECK(packed_size(3) == 6);
    Matrix s(3, 3);
    s << 1, 2, 3, 2, 4, 5, 3, 5, 6;
    const Vector v = pack_symmetric(s);
    CHECK(v.size() == 6);
    CHECK((unpack_symmetric(v, 0, 3) - s).norm() == 0.0);
    Matrix sum = Matrix::Zero(3, 3);
    for (Index k = 0; k < 6; ++k) sum += v(k) * packed_basis(3, k);
    CHECK((sum - s).norm() < 1e-15);
}

TEST_CASE("Schur complement matches the eigenvalue oracle") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix g(4, 4);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 4; ++j) g(i, j) = d(rng);
        Matrix m = g * g.transpose() + 0.1 * Matrix::Identity(4, 4);
        if (trial % 2) m(0, 0) -= 3.0;
        const Matrix sc = schur_complement(m, 2);
        const bool pd_full = min_eig_sym(m) > 0;
        const bool pd_schur = min_eig_sym(sc) > 0 && min_eig_sym(m.bottomRightCorner(2, 2)) > 0;
        CHECK(pd_full == pd_schur);
    }
    Matrix sing = Matrix::Identity(3, 3);
    sing(2, 2) = 0.0;
    CHECK_THROWS_AS(schur_complement(sing, 2), NumericalError);
}

TEST_CASE("non-strict PSD test handles singular Z") {
    // [[1, 0], [0, 0]] is PSD with Z = 0; [[1, 1], [1, 0]] is not.
    Matrix ok(2, 2);
    ok << 1, 0, 0, 0;
    CHECK(psd_test_nonstrict(ok, 1));
    Matrix bad(2, 2);
    bad << 1, 1, 1, 0;
    CHECK_FALSE(psd_test_nonstrict(bad, 1));
    std::mt19937_64 rng(2);
    std::normal_distribution<double> d;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix g(4, 2);
        for (Index i = 0; i < 4; ++i)
            for (Index j = 0; j < 2; ++j) g(i, j) = d(rng);
        Matrix m = g * g.transpose();  // rank 2, PSD
        if (trial % 2) m(0, 0) -= 0.5;
        CHECK(psd_test_nonstrict(m, 2, 1e-9) == (min_eig_sym(m) >= -1e-9));
    }
}
