#include "sofctl/care.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "sofctl/error.hpp"
#include "sofctl/lmi.hpp"

namespace sofctl {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;

std::string shape(const Matrix& m) {
    std::ostringstream os;
    os << m.rows() << "x" << m.cols();
    return os.str();
}

void require_shape(const Matrix& m, Index rows, Index cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols) {
        std::ostringstream os;
        os << name << ": expected " << rows << "x" << cols << ", got " << shape(m);
        throw DimensionError(os.str());
    }
    if (!m.allFinite()) throw DimensionError(std::string(name) + ": non-finite entries");
}

void check_care_inputs(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Index n = a.rows();
    require_shape(a, n, n, "A");
    require_shape(b, n, b.cols(), "B");
    Weights{q, r}.validate(n, b.cols());
}

// Kronecker product A (x) B.
Matrix kron(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i) {
        for (Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

// Initial P from the stable eigenvectors of the Hamiltonian.
Matrix hamiltonian_solution(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r) {
    const Index n = a.rows();
    Matrix h(2 * n, 2 * n);
    h.topLeftCorner(n, n) = a;
    h.topRightCorner(n, n) = -b * solve_linear(r, b.transpose());
    h.bottomLeftCorner(n, n) = -q;
    h.bottomRightCorner(n, n) = -a.transpose();

    Eigen::EigenSolver<Matrix> es;
    es.setMaxIterations(100 * 2 * n);
    es.compute(h, /*computeEigenvectors=*/true);
    if (es.info() != Eigen::Success) {
        throw ConvergenceError("solve_care: Hamiltonian eigensolver did not converge");
    }
    const double axis_tol = 1e-8 * std::max(1.0, h.norm());
    ComplexMatrix basis(2 * n, n);
    Index found = 0;
    for (Index i = 0; i < 2 * n; ++i) {
        const double re = es.eigenvalues()(i).real();
        if (std::abs(re) <= axis_tol) {
            throw NumericalError(
                "solve_care: Hamiltonian has eigenvalues on the imaginary axis (ill-posed problem)");
        }
        if (re < 0.0 && found < n) basis.col(found++) = es.eigenvectors().col(i);
    }
    if (found != n) {
        throw NumericalError("solve_care: stable invariant subspace has the wrong dimension");
    }
    const ComplexMatrix x1 = basis.topRows(n);
    const ComplexMatrix x2 = basis.bottomRows(n);
    Eigen::PartialPivLU<ComplexMatrix> lu(x1.transpose());
    if (!(lu.rcond() > 1e-13)) {
        throw NumericalError("solve_care: stable eigenvector block X1 is singular");
    }
    const ComplexMatrix pt = lu.solve(x2.transpose());
    return symmetrize(pt.transpose().real());
}

}  // namespace

const char* to_string(SystemMode mode) {
    switch (mode) {
        case SystemMode::NoD: return "no-d";
        case SystemMode::MeasurementDisturbance: return "measurement-disturbance";
        case SystemMode::DirectFeedthrough: return "direct-feedthrough";
    }
    return "unknown";
}

SystemMode mode_from_string(const std::string& text) {
    if (text == "no-d") return SystemMode::NoD;
    if (text == "measurement-disturbance") return SystemMode::MeasurementDisturbance;
    if (text == "direct-feedthrough") return SystemMode::DirectFeedthrough;
    throw InputError("unknown system mode '" + text + "'");
}

Matrix LinearSystem::d_or_zero(Index cols) const {
    if (mode == SystemMode::NoD) return Matrix::Zero(p(), cols);
    return D;
}

void LinearSystem::validate() const {
    const Index nn = A.rows();
    if (nn == 0) throw DimensionError("A: system has no states");
    require_shape(A, nn, nn, "A");
    require_shape(B, nn, B.cols(), "B");
    if (B.cols() == 0) throw DimensionError("B: system has no inputs");
    require_shape(C, C.rows(), nn, "C");
    if (C.rows() == 0) throw DimensionError("C: system has no outputs");
    switch (mode) {
        case SystemMode::NoD:
            if (D.size() != 0) throw DimensionError("D: must be empty in no-d mode");
            break;
        case SystemMode::MeasurementDisturbance:
            require_shape(D, C.rows(), D.cols(), "D");
            if (D.cols() == 0) throw DimensionError("D: disturbance width is zero");
            break;
        case SystemMode::DirectFeedthrough:
            require_shape(D, C.rows(), B.cols(), "D");
            break;
    }
}

void Weights::validate(Index n, Index m) const {
    require_shape(Q, n, n, "Q");
    require_shape(R, m, m, "R");
    if (relative_asymmetry(Q) > 1e-12) throw DimensionError("Q: not symmetric");
    if (relative_asymmetry(R) > 1e-12) throw DimensionError("R: not symmetric");
    if (min_eig_sym(Q) < -1e-10) throw DimensionError("Q: not positive semidefinite");
    if (!(min_eig_sym(R) > 0.0)) throw DimensionError("R: not positive definite");
}

RankReport check_controllable(const Matrix& a, const Matrix& b, double tol) {
    const Index n = a.rows();
    require_shape(a, n, n, "A");
    require_shape(b, n, b.cols(), "B");
    const Index m = b.cols();
    Matrix ctrb(n, n * m);
    Matrix block = b;
    for (Index k = 0; k < n; ++k) {
        ctrb.middleCols(k * m, m) = block;
        block = a * block;
    }
    RankReport rep;
    rep.required = n;
    rep.rank = numerical_rank(ctrb, tol);
    rep.full_rank = rep.rank == n;
    return rep;
}

RankReport check_observable(const Matrix& a, const Matrix& c, double tol) {
    require_shape(c, c.rows(), a.rows(), "C");
    return check_controllable(a.transpose(), c.transpose(), tol);
}

Matrix solve_lyapunov(const Matrix& a, const Matrix& q) {
    const Index n = a.rows();
    require_shape(a, n, n, "A");
    require_shape(q, n, n, "Q");
    if (!(spectral_abscissa(a) < 0.0)) {
        throw NumericalError("solve_lyapunov: A is not Hurwitz");
    }
    const Matrix eye = Matrix::Identity(n, n);
    const Matrix at = a.transpose();
    const Matrix op = kron(eye, at) + kron(at, eye);
    const Vector rhs = -Eigen::Map<const Vector>(q.data(), n * n);
    Eigen::PartialPivLU<Matrix> lu(op);
    if (!(lu.rcond() > 4.0 * std::numeric_limits<double>::epsilon())) {
        throw NumericalError("solve_lyapunov: Kronecker system is singular");
    }
    Vector x = lu.solve(rhs);
    x += lu.solve(rhs - op * x);
    Matrix sol = symmetrize(Eigen::Map<Matrix>(x.data(), n, n));
    return sol;
}

double care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p) {
    const Matrix pb = p * b;
    const Matrix res = -a.transpose() * p - p * a + pb * solve_linear(r, pb.transpose()) - q;
    return res.norm();
}

double care_residual_scale(const Matrix& a, const Matrix& p) {
    return 1.0 + p.norm() * a.norm();
}

Matrix lqr_gain(const Matrix& p, const Matrix& b, const Matrix& r) {
    if (p.rows() != b.rows() || r.rows() != b.cols() || r.cols() != b.cols()) {
        throw DimensionError("lqr_gain: dimension mismatch");
    }
    Eigen::LLT<Matrix> llt(symmetrize(r));
    if (llt.info() != Eigen::Success) throw DimensionError("lqr_gain: R is not positive definite");
    return -llt.solve(b.transpose() * p);
}

double lqr_cost(const Matrix& p, const Vector& x0) {
    if (p.rows() != x0.size() || p.cols() != x0.size()) {
        throw DimensionError("lqr_cost: dimension mismatch");
    }
    return 0.5 * x0.dot(p * x0);
}

RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                           const CareOptions& options) {
    check_care_inputs(a, b, q, r);
    RiccatiSolution sol;

    const auto ctrb = check_controllable(a, b, options.rank_tol);
    if (!ctrb.full_rank) {
        std::ostringstream os;
        os << "(A,B) is not controllable: rank " << ctrb.rank << " < " << ctrb.required;
        if (options.strict_assumptions) throw AssumptionError(os.str());
        sol.warnings.push_back(os.str());
    }
    const auto obsv = check_observable(a, psd_sqrt(q), options.rank_tol);
    if (!obsv.full_rank) {
        std::ostringstream os;
        os << "(A, sqrt(Q)) is not observable: rank " << obsv.rank << " < " << obsv.required;
        if (options.strict_assumptions) throw AssumptionError(os.str());
        sol.warnings.push_back(os.str());
    }

    Matrix p = hamiltonian_solution(a, b, q, r);
    const double target = 1e-10;
    double res = care_residual(a, b, q, r, p);

    // Newton-Kleinman: (A + B K)^T P + P (A + B K) + Q + K^T R K = 0 with K from the previous P.
    int iters = 0;
    while (iters < options.max_refinements && res > target * care_residual_scale(a, p)) {
        const Matrix k = lqr_gain(p, b, r);
        const Matrix acl = a + b * k;
        if (!(spectral_abscissa(acl) < 0.0)) break;
        Matrix next;
        try {
            next = solve_lyapunov(acl, q + k.transpose() * r * k);
        } catch (const NumericalError&) {
            break;
        }
        const double next_res = care_residual(a, b, q, r, next);
        if (!(next_res < res)) break;
        p = std::move(next);
        res = next_res;
        ++iters;
    }

    sol.P = p;
    sol.residual_norm = res;
    sol.refinement_iterations = iters;
    if (!(res <= 1e-8 * care_residual_scale(a, p))) {
        std::ostringstream os;
        os << "solve_care: refinement failed to reach the residual tolerance (residual " << res << ")";
        throw ConvergenceError(os.str());
    }
    if (!(min_eig_sym(p) > 0.0)) {
        throw NumericalError("solve_care: Riccati solution is not positive definite");
    }
    sol.K = lqr_gain(p, b, r);
    if (!(spectral_abscissa(a + b * sol.K) < 0.0)) {
        throw NumericalError("solve_care: LQR closed loop is not stable");
    }
    return sol;
}

LqrSdpResult lqr_sdp(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const CareOptions& options) {
    check_care_inputs(a, b, q, r);
    const Index n = a.rows();
    const Index m = b.cols();
    if (options.strict_assumptions) {
        if (!check_controllable(a, b, options.rank_tol).full_rank) {
            throw AssumptionError("(A,B) is not controllable");
        }
        if (!check_observable(a, psd_sqrt(q), options.rank_tol).full_rank) {
            throw AssumptionError("(A, sqrt(Q)) is not observable");
        }
    }

    const Index nv = packed_size(n);
    LinearMatrixExpr expr(nv);
    Matrix g0 = Matrix::Zero(n + m, n + m);
    g0.topLeftCorner(n, n) = symmetrize(q);
    g0.bottomRightCorner(m, m) = symmetrize(r);
    const auto blk = expr.add_block(g0);
    Vector c = Vector::Zero(nv);
    for (Index k = 0; k < nv; ++k) {
        const Matrix e = packed_basis(n, k);
        Matrix g = Matrix::Zero(n + m, n + m);
        g.topLeftCorner(n, n) = a.transpose() * e + e * a;
        g.topRightCorner(n, m) = e * b;
        g.bottomLeftCorner(m, n) = b.transpose() * e;
        expr.set_coefficient(blk, k, symmetrize(g));
        c(k) = e.trace() == 1.0 ? 1.0 : 0.0;
    }

    const auto sol = solve_sdp(expr, c, /*maximize=*/true);
    if (sol.status != SdpStatus::Optimal) {
        throw NumericalError(std::string("lqr_sdp: solver finished with status ") +
                             to_string(sol.status) + (sol.message.empty() ? "" : ": " + sol.message));
    }
    return LqrSdpResult{unpack_symmetric(sol.x, 0, n), sol.objective, sol.iterations};
}

}  // namespace sofctl
