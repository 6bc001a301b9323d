#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sofctl/care.hpp"
#include "sofctl/lmi.hpp"

namespace sofctl {

struct SofOptions {
    // Treat Q as a packed symmetric variable constrained by 0 <= Q <= Q0.
    bool q_variable = false;
    // Leave the N term out of the upper-left block.
    bool drop_n_term = false;
    // Required alpha when strict_assumptions is set.
    double alpha_margin = 0.0;
    // Assumption checks become errors and "stabilizing" additionally needs alpha >= alpha_margin.
    bool strict_assumptions = false;
    // Radius of the Frobenius ball the gain is kept in during synthesis. 0 picks
    // 1e3 * (1 + ||K_lqr||_F); a negative value removes the ball.
    double gain_radius = 0.0;
    double rank_tol = 1e-9;
    SdpSettings sdp{};
};

enum class SofStatus { Stabilizing, FeasibleButUnstable, Infeasible, Error };

const char* to_string(SofStatus status);

struct StructureReport {
    Matrix cb_product;
    bool obstruction = false;
    double bpb_min_eig = 0.0;
    // min over F of ||R F C + B^T P||_F; zero iff K = F C is reachable.
    double structure_residual = 0.0;
};

/// Decides whether the LQR gain can factor as K = F C. When C B vanishes the
/// constraint R F C + B^T P = 0 would force B^T P B = 0, impossible for P > 0.
StructureReport precheck_structure(const LinearSystem& sys, const Matrix& p, const Matrix& r);

// Position of each unknown inside the LMI variable vector.
struct SofLayout {
    Index m = 0;
    Index p = 0;
    Index n = 0;
    Index alpha = 0;     // index of alpha
    Index q_offset = -1; // first packed Q entry, -1 when Q is fixed
    Index num_vars = 0;

    Index f_index(Index row, Index col) const { return row * p + col; }
};

SofLayout sof_layout(const LinearSystem& sys, bool q_variable);
Vector pack_sof_point(const SofLayout& layout, const Matrix& f, double alpha,
                      const std::optional<Matrix>& q = std::nullopt);
Matrix unpack_gain(const SofLayout& layout, const Vector& x);

/// The dissipativity block
///   [[Q - P B F C - C^T F^T B^T P + N, P B (I + F D)], [(I + F D)^T B^T P, R]]
/// with N = P B (F D R^{-1} + R^{-1} D^T F^T) B^T P, assembled directly.
/// In measurement-disturbance mode D must have m columns.
Matrix dissipativity_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                           const Matrix& r, const Matrix& f, bool drop_n_term = false);

/// Affine LMI in (F, alpha[, Q]) whose value is blockdiag(dissipativity_block - alpha I[, Q, Q0 - Q]).
/// Refuses to build when P does not solve the Riccati equation for (Q0, R).
LinearMatrixExpr build_sof_lmi(const LinearSystem& sys, const Matrix& p, const Matrix& q0,
                               const Matrix& r, const SofOptions& options = {});

struct SofResult {
    Matrix F;
    Matrix F_bar;  // (I - F D)^{-1} F C in feedthrough mode, F C otherwise
    double alpha = 0.0;
    Matrix P;
    Matrix Q_used;
    double certificate_min_eig = 0.0;
    double closed_loop_abscissa = 0.0;
    Spectrum closed_loop_spectrum;
    SofStatus status = SofStatus::Error;
    SdpStatus sdp_status = SdpStatus::NumericalFailure;
    int sdp_iterations = 0;
    RiccatiSolution riccati;
    StructureReport precheck;
    std::vector<std::string> warnings;
};

/// Maximizes alpha over the dissipativity LMI for no-d or measurement-disturbance
/// systems. Stability is judged by the closed-loop spectrum, whatever alpha's sign.
SofResult synthesize_sof(const LinearSystem& sys, const Weights& weights,
                         const SofOptions& options = {});

/// Closed-loop gain of the feedthrough loop u = F (C x + D u); throws
/// WellPosednessError when I - F D is singular to a 1e-10 condition estimate.
Matrix feedthrough_gain(const LinearSystem& sys, const Matrix& f);

/// Linearized three-block feedthrough matrix at a fixed F:
///   [[M, P Bbar, C^T F^T], [Bbar^T P, R, 0], [F C, 0, R^{-1} - F D R^{-1} - R^{-1} D^T F^T]].
Matrix feedthrough_corollary_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                                   const Matrix& r, const Matrix& f, bool drop_n_term = false);

/// Same layout with the exact lower-right block (I - F D) R^{-1} (I - D^T F^T).
Matrix feedthrough_bmi_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                             const Matrix& r, const Matrix& f);

/// Minimum eigenvalue of feedthrough_bmi_block; a certificate only, never optimized.
double feedthrough_bmi_min_eig(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                               const Matrix& r, const Matrix& f);

/// Affine LMI in (F, alpha) whose value is feedthrough_corollary_block - alpha I.
LinearMatrixExpr build_feedthrough_lmi(const LinearSystem& sys, const Matrix& p, const Matrix& q0,
                                       const Matrix& r, const SofOptions& options = {});

SofResult synthesize_sof_feedthrough(const LinearSystem& sys, const Weights& weights,
                                     const SofOptions& options = {});

/// Dispatches on the system mode.
SofResult synthesize(const LinearSystem& sys, const Weights& weights, const SofOptions& options = {});

/// Largest eigenvalue of (A + B F C)^T P + P (A + B F C); negative certifies stability.
double lyapunov_form_max_eig(const LinearSystem& sys, const Matrix& p, const Matrix& f);

}  // namespace sofctl
