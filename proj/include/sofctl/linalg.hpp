#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace sofctl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Eigenvalues of a real square matrix; complex pairs appear as conjugates.
using Spectrum = std::vector<std::complex<double>>;

struct SymmetricEigen {
    Vector values;   // ascending
    Matrix vectors;  // orthonormal columns, vectors.col(i) pairs with values(i)
};

/// (S + S^T) / 2.
Matrix symmetrize(const Matrix& s);

bool all_finite(const Matrix& m);

/// Largest |S - S^T| entry relative to 1 + ||S||_F.
double relative_asymmetry(const Matrix& s);

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
///
/// The input must be square and symmetric to within 1e-12 relative asymmetry;
/// it is symmetrized before iterating. Throws DimensionError otherwise and
/// ConvergenceError if the off-diagonal mass does not vanish within the sweep cap.
SymmetricEigen sym_eig(const Matrix& s);

double min_eig_sym(const Matrix& s);
double max_eig_sym(const Matrix& s);

/// Hessenberg reduction followed by shifted QR (Francis double shift), capped
/// at 100*n iterations. Throws ConvergenceError instead of returning a partial
/// spectrum.
Spectrum general_eig(const Matrix& a);

/// Largest real part over general_eig(a).
double spectral_abscissa(const Matrix& a);

/// Symmetric PSD square root. Eigenvalues down to -1e-10 * (1 + ||S||_F) are
/// clamped to zero; anything more negative is rejected.
Matrix psd_sqrt(const Matrix& s);

/// Reciprocal condition estimate of a square matrix in the 1-norm (LU based).
double rcond_estimate(const Matrix& a);

/// Solves A X = B with partial-pivot LU; rejects matrices whose reciprocal
/// condition estimate is below machine precision.
Matrix solve_linear(const Matrix& a, const Matrix& b);

/// Count of singular values above tol * sigma_max.
Index numerical_rank(const Matrix& m, double tol = 1e-9);

Matrix pseudo_inverse(const Matrix& m);

/// rows x cols matrix with a single 1 at (r, c).
Matrix unit_matrix(Index rows, Index cols, Index r, Index c);

/// Block-diagonal concatenation.
Matrix block_diag(const Matrix& a, const Matrix& b);

}  // namespace sofctl
