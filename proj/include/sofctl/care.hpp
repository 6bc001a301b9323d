#pragma once

#include <string>
#include <vector>

#include "sofctl/linalg.hpp"

namespace sofctl {

// How D enters the output equation.
enum class SystemMode {
    NoD,                     // y = Cx
    MeasurementDisturbance,  // y = Cx + Dw
    DirectFeedthrough,       // y = Cx + Du
};

const char* to_string(SystemMode mode);
SystemMode mode_from_string(const std::string& text);

struct LinearSystem {
    Matrix A;  // n x n
    Matrix B;  // n x m
    Matrix C;  // p x n
    Matrix D;  // p x n_w (measurement disturbance), p x m (feedthrough), empty for NoD
    SystemMode mode = SystemMode::NoD;

    Index n() const { return A.rows(); }
    Index m() const { return B.cols(); }
    Index p() const { return C.rows(); }
    // Disturbance width; 0 when the mode carries no D.
    Index n_w() const { return mode == SystemMode::MeasurementDisturbance ? D.cols() : 0; }

    // D padded to p x cols with zeros in NoD mode; otherwise D itself.
    Matrix d_or_zero(Index cols) const;

    /// Throws DimensionError naming the offending field.
    void validate() const;
};

struct Weights {
    Matrix Q;  // n x n, symmetric PSD
    Matrix R;  // m x m, symmetric PD

    void validate(Index n, Index m) const;
};

struct RankReport {
    bool full_rank = false;
    Index rank = 0;
    Index required = 0;
};

RankReport check_controllable(const Matrix& a, const Matrix& b, double tol = 1e-9);
RankReport check_observable(const Matrix& a, const Matrix& c, double tol = 1e-9);

/// Solves A^T X + X A + Q = 0 for stable A via the n^2 x n^2 Kronecker system.
Matrix solve_lyapunov(const Matrix& a, const Matrix& q);

struct CareOptions {
    // Controllability of (A,B) and observability of (A, sqrt Q) become hard errors.
    bool strict_assumptions = false;
    double rank_tol = 1e-9;
    int max_refinements = 50;
};

struct RiccatiSolution {
    Matrix P;
    Matrix K;
    double residual_norm = 0.0;
    int refinement_iterations = 0;
    std::vector<std::string> warnings;
};

/// ||-A^T P - P A + P B R^{-1} B^T P - Q||_F.
double care_residual(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const Matrix& p);

/// Scale used for the residual acceptance test: 1 + ||P||_F * ||A||_F.
double care_residual_scale(const Matrix& a, const Matrix& p);

/// Stabilizing solution of -A^T P - P A + P B R^{-1} B^T P = Q.
///
/// The stable invariant subspace of the Hamiltonian [[A, -B R^{-1} B^T], [-Q, -A^T]]
/// gives an initial P = X2 X1^{-1}, which Newton-Kleinman iterations then refine
/// until the residual reaches 1e-10 relative to care_residual_scale.
RiccatiSolution solve_care(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                           const CareOptions& options = {});

/// K = -R^{-1} B^T P.
Matrix lqr_gain(const Matrix& p, const Matrix& b, const Matrix& r);

/// Optimal LQR cost 1/2 x0^T P x0.
double lqr_cost(const Matrix& p, const Vector& x0);

struct LqrSdpResult {
    Matrix P;
    double objective = 0.0;
    int iterations = 0;
};

/// max trace(P) s.t. [[A^T P + P A + Q, P B], [B^T P, R]] >= 0, solved with the
/// built-in barrier SDP solver.
LqrSdpResult lqr_sdp(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                     const CareOptions& options = {});

}  // namespace sofctl
