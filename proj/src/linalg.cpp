#include "sofctl/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sofctl/error.hpp"

namespace sofctl {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kJacobiMaxSweeps = 100;

void require_square(const Matrix& m, const char* what) {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << ": expected a square matrix, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

void require_symmetric(const Matrix& s, const char* what) {
    require_square(s, what);
    if (!all_finite(s)) {
        throw DimensionError(std::string(what) + ": non-finite entries");
    }
    if (relative_asymmetry(s) > 1e-12) {
        throw DimensionError(std::string(what) + ": matrix is not symmetric");
    }
}

// One Jacobi rotation annihilating a(p, q).
void rotate(Matrix& a, Matrix& v, Index p, Index q) {
    const double apq = a(p, q);
    const double tau = (a(q, q) - a(p, p)) / (2.0 * apq);
    const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const Index n = a.rows();
    for (Index k = 0; k < n; ++k) {
        const double akp = a(k, p);
        const double akq = a(k, q);
        a(k, p) = c * akp - s * akq;
        a(k, q) = s * akp + c * akq;
    }
    for (Index k = 0; k < n; ++k) {
        const double apk = a(p, k);
        const double aqk = a(q, k);
        a(p, k) = c * apk - s * aqk;
        a(q, k) = s * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    for (Index k = 0; k < n; ++k) {
        const double vkp = v(k, p);
        const double vkq = v(k, q);
        v(k, p) = c * vkp - s * vkq;
        v(k, q) = s * vkp + c * vkq;
    }
}

}  // namespace

Matrix symmetrize(const Matrix& s) {
    return 0.5 * (s + s.transpose());
}

bool all_finite(const Matrix& m) {
    return m.allFinite();
}

double relative_asymmetry(const Matrix& s) {
    if (s.size() == 0) return 0.0;
    return (s - s.transpose()).cwiseAbs().maxCoeff() / (1.0 + s.norm());
}

SymmetricEigen sym_eig(const Matrix& s) {
    require_symmetric(s, "sym_eig");
    const Index n = s.rows();
    Matrix a = symmetrize(s);
    Matrix v = Matrix::Identity(n, n);

    bool converged = n <= 1;
    for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
        bool rotated = false;
        for (Index p = 0; p + 1 < n; ++p) {
            for (Index q = p + 1; q < n; ++q) {
                const double apq = std::abs(a(p, q));
                if (apq <= std::numeric_limits<double>::min()) continue;
                // Demmel-Veselic threshold keeps small eigenvalues relatively accurate.
                if (apq <= kEps * std::sqrt(std::abs(a(p, p)) * std::abs(a(q, q)))) {
                    a(p, q) = a(q, p) = 0.0;
                    continue;
                }
                rotate(a, v, p, q);
                rotated = true;
            }
        }
        converged = !rotated;
    }
    if (!converged) {
        throw ConvergenceError("sym_eig: Jacobi sweeps did not converge");
    }

    std::vector<Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index i, Index j) { return a(i, i) < a(j, j); });

    SymmetricEigen out{Vector(n), Matrix(n, n)};
    for (Index k = 0; k < n; ++k) {
        const Index src = order[static_cast<std::size_t>(k)];
        out.values(k) = a(src, src);
        out.vectors.col(k) = v.col(src);
    }
    return out;
}

double min_eig_sym(const Matrix& s) {
    const auto e = sym_eig(s);
    if (e.values.size() == 0) throw DimensionError("min_eig_sym: empty matrix");
    return e.values(0);
}

double max_eig_sym(const Matrix& s) {
    const auto e = sym_eig(s);
    if (e.values.size() == 0) throw DimensionError("max_eig_sym: empty matrix");
    return e.values(e.values.size() - 1);
}

Spectrum general_eig(const Matrix& a) {
    require_square(a, "general_eig");
    if (!all_finite(a)) throw DimensionError("general_eig: non-finite entries");
    const Index n = a.rows();
    if (n == 0) return {};
    Eigen::EigenSolver<Matrix> solver;
    solver.setMaxIterations(static_cast<Index>(100) * n);
    solver.compute(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("general_eig: shifted QR did not converge");
    }
    Spectrum out;
    out.reserve(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) out.push_back(solver.eigenvalues()(i));
    return out;
}

double spectral_abscissa(const Matrix& a) {
    const auto spec = general_eig(a);
    if (spec.empty()) throw DimensionError("spectral_abscissa: empty matrix");
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& z : spec) best = std::max(best, z.real());
    return best;
}

Matrix psd_sqrt(const Matrix& s) {
    const auto e = sym_eig(s);
    const double floor = -1e-10 * (1.0 + s.norm());
    Vector root(e.values.size());
    for (Index i = 0; i < e.values.size(); ++i) {
        if (e.values(i) < floor) {
            throw DimensionError("psd_sqrt: matrix is indefinite");
        }
        root(i) = std::sqrt(std::max(e.values(i), 0.0));
    }
    return symmetrize(e.vectors * root.asDiagonal() * e.vectors.transpose());
}

double rcond_estimate(const Matrix& a) {
    require_square(a, "rcond_estimate");
    if (a.rows() == 0) return 1.0;
    Eigen::PartialPivLU<Matrix> lu(a);
    return lu.rcond();
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
    require_square(a, "solve_linear");
    if (a.rows() != b.rows()) {
        throw DimensionError("solve_linear: right-hand side height does not match");
    }
    Eigen::PartialPivLU<Matrix> lu(a);
    const double rc = lu.rcond();
    if (!(rc > 4.0 * kEps)) {
        std::ostringstream os;
        os << "solve_linear: matrix is singular to working precision (rcond " << rc << ")";
        throw NumericalError(os.str());
    }
    Matrix x = lu.solve(b);
    if (!all_finite(x)) throw NumericalError("solve_linear: non-finite solution");
    return x;
}

Index numerical_rank(const Matrix& m, double tol) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double cut = tol * sv(0);
    Index rank = 0;
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) ++rank;
    }
    return rank;
}

Matrix pseudo_inverse(const Matrix& m) {
    if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
    Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const double cut =
        sv.size() > 0 ? static_cast<double>(std::max(m.rows(), m.cols())) * kEps * sv(0) : 0.0;
    Vector inv = Vector::Zero(sv.size());
    for (Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cut) inv(i) = 1.0 / sv(i);
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Matrix unit_matrix(Index rows, Index cols, Index r, Index c) {
    Matrix e = Matrix::Zero(rows, cols);
    e(r, c) = 1.0;
    return e;
}

Matrix block_diag(const Matrix& a, const Matrix& b) {
    Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
    out.topLeftCorner(a.rows(), a.cols()) = a;
    out.bottomRightCorner(b.rows(), b.cols()) = b;
    return out;
}

}  // namespace sofctl
