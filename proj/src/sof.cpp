#include "sofctl/sof.hpp"

#include <cmath>
#include <sstream>

#include "sofctl/error.hpp"
#include "sofctl/verify.hpp"

namespace sofctl {

namespace {

constexpr double kStableAbscissa = -1e-9;

Matrix inverse_spd(const Matrix& r) {
    Eigen::LLT<Matrix> llt(symmetrize(r));
    if (llt.info() != Eigen::Success) throw DimensionError("R: not positive definite");
    return symmetrize(llt.solve(Matrix::Identity(r.rows(), r.cols())));
}

// D as it enters N and Bbar: p x m, zero in no-d mode.
Matrix loop_d(const LinearSystem& sys) {
    const Index m = sys.m();
    if (sys.mode == SystemMode::NoD) return Matrix::Zero(sys.p(), m);
    if (sys.D.cols() != m) {
        std::ostringstream os;
        os << "D: the supply rate w^T R w needs a disturbance of width m = " << m << ", got "
           << sys.D.cols();
        throw DimensionError(os.str());
    }
    return sys.D;
}

void check_fixed_inputs(const LinearSystem& sys, const Matrix& p, const Matrix& q, const Matrix& r) {
    sys.validate();
    const Index n = sys.n();
    const Index m = sys.m();
    if (p.rows() != n || p.cols() != n) throw DimensionError("P: expected n x n");
    if (q.rows() != n || q.cols() != n) throw DimensionError("Q: expected n x n");
    if (r.rows() != m || r.cols() != m) throw DimensionError("R: expected m x m");
}

void check_gain(const LinearSystem& sys, const Matrix& f) {
    if (f.rows() != sys.m() || f.cols() != sys.p()) {
        std::ostringstream os;
        os << "F: expected " << sys.m() << "x" << sys.p() << ", got " << f.rows() << "x" << f.cols();
        throw DimensionError(os.str());
    }
}

// Upper-left contribution of a gain: -P B F C - C^T F^T B^T P + N(F).
Matrix gain_upper_left(const Matrix& pb, const Matrix& c, const Matrix& d, const Matrix& rinv,
                       const Matrix& f, bool drop_n) {
    const Matrix pbfc = pb * f * c;
    Matrix out = -pbfc - pbfc.transpose();
    if (!drop_n) {
        const Matrix fdr = f * d * rinv;
        out += pb * (fdr + fdr.transpose()) * pb.transpose();
    }
    return out;
}

void require_riccati(const LinearSystem& sys, const Matrix& p, const Matrix& q0, const Matrix& r) {
    const double res = care_residual(sys.A, sys.B, q0, r, p);
    if (!(res <= 1e-8 * care_residual_scale(sys.A, p))) {
        std::ostringstream os;
        os << "P does not solve the Riccati equation for (Q0, R): residual " << res;
        throw NumericalError(os.str());
    }
}

double resolve_gain_radius(const SofOptions& options, const Matrix& k) {
    if (options.gain_radius < 0.0) return -1.0;
    if (options.gain_radius > 0.0) return options.gain_radius;
    return 1e3 * (1.0 + k.norm());
}

// ||vec F||^2 <= radius^2 as [[radius I, vec F], [vec F^T, radius]] >= 0.
void append_gain_ball(LinearMatrixExpr& expr, const SofLayout& layout, double radius) {
    const Index k = layout.m * layout.p;
    Matrix g0 = radius * Matrix::Identity(k + 1, k + 1);
    const auto blk = expr.add_block(g0);
    for (Index i = 0; i < k; ++i) {
        Matrix g = Matrix::Zero(k + 1, k + 1);
        g(i, k) = 1.0;
        g(k, i) = 1.0;
        expr.set_coefficient(blk, i, g);
    }
}

SofStatus judge(const SofResult& res, const SofOptions& options) {
    const bool stable = res.closed_loop_abscissa < kStableAbscissa;
    if (!stable) return SofStatus::FeasibleButUnstable;
    if (options.strict_assumptions && res.alpha < options.alpha_margin) {
        return SofStatus::FeasibleButUnstable;
    }
    return SofStatus::Stabilizing;
}

// CARE, structural precheck and assumption checks shared by both synthesis paths.
SofResult prepare(const LinearSystem& sys, const Weights& weights, const SofOptions& options) {
    sys.validate();
    weights.validate(sys.n(), sys.m());
    SofResult res;
    const auto obs = check_observable(sys.A, sys.C, options.rank_tol);
    if (!obs.full_rank) {
        std::ostringstream os;
        os << "(A,C) is not observable: rank " << obs.rank << " < " << obs.required;
        if (options.strict_assumptions) throw AssumptionError(os.str());
        res.warnings.push_back(os.str());
    }
    CareOptions care_opts;
    care_opts.strict_assumptions = options.strict_assumptions;
    care_opts.rank_tol = options.rank_tol;
    res.riccati = solve_care(sys.A, sys.B, weights.Q, weights.R, care_opts);
    for (const auto& w : res.riccati.warnings) res.warnings.push_back(w);
    res.P = res.riccati.P;
    res.precheck = precheck_structure(sys, res.P, weights.R);
    if (res.precheck.obstruction) {
        res.warnings.push_back(
            "C B = 0: the LQR gain cannot factor as F C; synthesis proceeds on the LMI");
    }
    return res;
}

void finish(SofResult& res, const SdpSolution& sol) {
    res.sdp_status = sol.status;
    res.sdp_iterations = sol.iterations;
    if (sol.status == SdpStatus::NumericalFailure) {
        throw NumericalError("SDP solver failed: " + sol.message);
    }
    if (sol.status == SdpStatus::Infeasible) {
        res.status = SofStatus::Infeasible;
        return;
    }
    if (sol.status == SdpStatus::MaxIterations) {
        res.warnings.push_back("SDP solver stopped at its iteration cap: " + sol.message);
    }
}

}  // namespace

const char* to_string(SofStatus status) {
    switch (status) {
        case SofStatus::Stabilizing: return "stabilizing";
        case SofStatus::FeasibleButUnstable: return "feasible-but-unstable";
        case SofStatus::Infeasible: return "infeasible";
        case SofStatus::Error: return "error";
    }
    return "unknown";
}

StructureReport precheck_structure(const LinearSystem& sys, const Matrix& p, const Matrix& r) {
    sys.validate();
    StructureReport rep;
    rep.cb_product = sys.C * sys.B;
    rep.obstruction = rep.cb_product.norm() <= 1e-12 * (1.0 + sys.C.norm() * sys.B.norm());
    rep.bpb_min_eig = min_eig_sym(symmetrize(sys.B.transpose() * p * sys.B));

    // vec(R F C) = (C^T kron R) vec(F), column-major.
    const Index m = sys.m();
    const Index pp = sys.p();
    const Index n = sys.n();
    Matrix op(m * n, m * pp);
    for (Index j = 0; j < pp; ++j) {
        for (Index i = 0; i < m; ++i) {
            const Matrix rfc = r * unit_matrix(m, pp, i, j) * sys.C;
            op.col(j * m + i) = Eigen::Map<const Vector>(rfc.data(), m * n);
        }
    }
    const Matrix btp = sys.B.transpose() * p;
    const Vector rhs = -Eigen::Map<const Vector>(btp.data(), m * n);
    const Vector vecf = pseudo_inverse(op) * rhs;
    rep.structure_residual = (op * vecf - rhs).norm();
    return rep;
}

SofLayout sof_layout(const LinearSystem& sys, bool q_variable) {
    SofLayout l;
    l.m = sys.m();
    l.p = sys.p();
    l.n = sys.n();
    l.alpha = l.m * l.p;
    l.num_vars = l.alpha + 1;
    if (q_variable) {
        l.q_offset = l.num_vars;
        l.num_vars += packed_size(l.n);
    }
    return l;
}

Vector pack_sof_point(const SofLayout& layout, const Matrix& f, double alpha,
                      const std::optional<Matrix>& q) {
    if (f.rows() != layout.m || f.cols() != layout.p) throw DimensionError("F: wrong shape");
    Vector x = Vector::Zero(layout.num_vars);
    for (Index i = 0; i < layout.m; ++i) {
        for (Index j = 0; j < layout.p; ++j) x(layout.f_index(i, j)) = f(i, j);
    }
    x(layout.alpha) = alpha;
    if (layout.q_offset >= 0) {
        if (!q) throw DimensionError("pack_sof_point: Q required when Q is a variable");
        x.segment(layout.q_offset, packed_size(layout.n)) = pack_symmetric(*q);
    }
    return x;
}

Matrix unpack_gain(const SofLayout& layout, const Vector& x) {
    Matrix f(layout.m, layout.p);
    for (Index i = 0; i < layout.m; ++i) {
        for (Index j = 0; j < layout.p; ++j) f(i, j) = x(layout.f_index(i, j));
    }
    return f;
}

Matrix dissipativity_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                           const Matrix& r, const Matrix& f, bool drop_n_term) {
    check_fixed_inputs(sys, p, q, r);
    check_gain(sys, f);
    const Index n = sys.n();
    const Index m = sys.m();
    const Matrix d = loop_d(sys);
    const Matrix rinv = inverse_spd(r);
    const Matrix pb = p * sys.B;
    Matrix g(n + m, n + m);
    g.topLeftCorner(n, n) = q + gain_upper_left(pb, sys.C, d, rinv, f, drop_n_term);
    const Matrix pbbar = pb * (Matrix::Identity(m, m) + f * d);
    g.topRightCorner(n, m) = pbbar;
    g.bottomLeftCorner(m, n) = pbbar.transpose();
    g.bottomRightCorner(m, m) = r;
    return symmetrize(g);
}

LinearMatrixExpr build_sof_lmi(const LinearSystem& sys, const Matrix& p, const Matrix& q0,
                               const Matrix& r, const SofOptions& options) {
    check_fixed_inputs(sys, p, q0, r);
    if (sys.mode == SystemMode::DirectFeedthrough) {
        throw InputError("build_sof_lmi: direct-feedthrough systems use build_feedthrough_lmi");
    }
    require_riccati(sys, p, q0, r);
    const Index n = sys.n();
    const Index m = sys.m();
    const Matrix d = loop_d(sys);
    const Matrix rinv = inverse_spd(r);
    const Matrix pb = p * sys.B;
    const auto layout = sof_layout(sys, options.q_variable);

    LinearMatrixExpr expr(layout.num_vars);
    Matrix g0 = Matrix::Zero(n + m, n + m);
    if (!options.q_variable) g0.topLeftCorner(n, n) = symmetrize(q0);
    g0.topRightCorner(n, m) = pb;
    g0.bottomLeftCorner(m, n) = pb.transpose();
    g0.bottomRightCorner(m, m) = symmetrize(r);
    const auto main = expr.add_block(g0);

    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < sys.p(); ++j) {
            const Matrix e = unit_matrix(m, sys.p(), i, j);
            Matrix g = Matrix::Zero(n + m, n + m);
            g.topLeftCorner(n, n) = gain_upper_left(pb, sys.C, d, rinv, e, options.drop_n_term);
            const Matrix off = pb * e * d;
            g.topRightCorner(n, m) = off;
            g.bottomLeftCorner(m, n) = off.transpose();
            expr.set_coefficient(main, layout.f_index(i, j), symmetrize(g));
        }
    }
    expr.set_coefficient(main, layout.alpha, -Matrix::Identity(n + m, n + m));

    if (options.q_variable) {
        const auto lower = expr.add_block(Matrix::Zero(n, n));
        const auto upper = expr.add_block(symmetrize(q0));
        for (Index k = 0; k < packed_size(n); ++k) {
            const Matrix e = packed_basis(n, k);
            Matrix g = Matrix::Zero(n + m, n + m);
            g.topLeftCorner(n, n) = e;
            expr.set_coefficient(main, layout.q_offset + k, g);
            expr.set_coefficient(lower, layout.q_offset + k, e);
            expr.set_coefficient(upper, layout.q_offset + k, -e);
        }
    }
    return expr;
}

double lyapunov_form_max_eig(const LinearSystem& sys, const Matrix& p, const Matrix& f) {
    sys.validate();
    check_gain(sys, f);
    if (p.rows() != sys.n() || p.cols() != sys.n()) throw DimensionError("P: expected n x n");
    const Matrix acl = sys.A + sys.B * f * sys.C;
    return max_eig_sym(symmetrize(acl.transpose() * p + p * acl));
}

SofResult synthesize_sof(const LinearSystem& sys, const Weights& weights, const SofOptions& options) {
    if (sys.mode == SystemMode::DirectFeedthrough) {
        throw InputError("synthesize_sof: use synthesize_sof_feedthrough for direct-feedthrough systems");
    }
    sys.validate();
    loop_d(sys);
    if (options.q_variable && !(min_eig_sym(weights.Q) > 0.0)) {
        throw InputError("q_variable needs a positive definite Q0 so that 0 < Q < Q0 has an interior");
    }
    SofResult res = prepare(sys, weights, options);

    const auto layout = sof_layout(sys, options.q_variable);
    LinearMatrixExpr expr = build_sof_lmi(sys, res.P, weights.Q, weights.R, options);
    const double radius = resolve_gain_radius(options, res.riccati.K);
    if (radius > 0.0) append_gain_ball(expr, layout, radius);

    const Matrix f0 = Matrix::Zero(sys.m(), sys.p());
    std::optional<Matrix> q_start;
    if (options.q_variable) q_start = 0.5 * weights.Q;
    const Matrix main0 =
        dissipativity_block(sys, res.P, q_start.value_or(weights.Q), weights.R, f0, options.drop_n_term);
    const Vector start = pack_sof_point(layout, f0, min_eig_sym(main0) - 1.0, q_start);
    Vector objective = Vector::Zero(layout.num_vars);
    objective(layout.alpha) = 1.0;

    const auto sol = solve_sdp(expr, objective, /*maximize=*/true, start, options.sdp);
    finish(res, sol);
    if (res.status == SofStatus::Infeasible) return res;

    res.F = unpack_gain(layout, sol.x);
    res.alpha = sol.x(layout.alpha);
    res.Q_used = options.q_variable ? unpack_symmetric(sol.x, layout.q_offset, sys.n()) : weights.Q;
    res.F_bar = res.F * sys.C;
    res.certificate_min_eig = min_eig_sym(
        dissipativity_block(sys, res.P, res.Q_used, weights.R, res.F, options.drop_n_term));
    const Matrix acl = closed_loop_matrix(sys, res.F);
    res.closed_loop_spectrum = general_eig(acl);
    res.closed_loop_abscissa = spectral_abscissa(acl);
    res.status = judge(res, options);
    return res;
}

Matrix feedthrough_gain(const LinearSystem& sys, const Matrix& f) {
    check_gain(sys, f);
    const Index m = sys.m();
    const Matrix d = sys.mode == SystemMode::DirectFeedthrough ? sys.D : Matrix::Zero(sys.p(), m);
    const Matrix loop = Matrix::Identity(m, m) - f * d;
    if (!(rcond_estimate(loop) >= 1e-10)) {
        throw WellPosednessError("I - F D is singular: the feedback loop is not well posed");
    }
    return solve_linear(loop, f * sys.C);
}

namespace {

Matrix feedthrough_block(const LinearSystem& sys, const Matrix& p, const Matrix& q, const Matrix& r,
                         const Matrix& f, bool exact, bool drop_n) {
    check_fixed_inputs(sys, p, q, r);
    check_gain(sys, f);
    if (sys.mode != SystemMode::DirectFeedthrough) {
        throw InputError("feedthrough blocks need a direct-feedthrough system");
    }
    const Index n = sys.n();
    const Index m = sys.m();
    const Matrix& d = sys.D;
    const Matrix rinv = inverse_spd(r);
    const Matrix pb = p * sys.B;
    const Matrix eye = Matrix::Identity(m, m);

    Matrix g = Matrix::Zero(n + 2 * m, n + 2 * m);
    g.block(0, 0, n, n) = q + gain_upper_left(pb, sys.C, d, rinv, f, drop_n);
    const Matrix pbbar = pb * (eye + f * d);
    g.block(0, n, n, m) = pbbar;
    g.block(n, 0, m, n) = pbbar.transpose();
    g.block(n, n, m, m) = r;
    const Matrix fc = f * sys.C;
    g.block(0, n + m, n, m) = fc.transpose();
    g.block(n + m, 0, m, n) = fc;
    if (exact) {
        g.block(n + m, n + m, m, m) = (eye - f * d) * rinv * (eye - f * d).transpose();
    } else {
        const Matrix fdr = f * d * rinv;
        g.block(n + m, n + m, m, m) = rinv - fdr - fdr.transpose();
    }
    return symmetrize(g);
}

}  // namespace

Matrix feedthrough_corollary_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                                   const Matrix& r, const Matrix& f, bool drop_n_term) {
    return feedthrough_block(sys, p, q, r, f, /*exact=*/false, drop_n_term);
}

Matrix feedthrough_bmi_block(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                             const Matrix& r, const Matrix& f) {
    return feedthrough_block(sys, p, q, r, f, /*exact=*/true, /*drop_n=*/false);
}

double feedthrough_bmi_min_eig(const LinearSystem& sys, const Matrix& p, const Matrix& q,
                               const Matrix& r, const Matrix& f) {
    return min_eig_sym(feedthrough_bmi_block(sys, p, q, r, f));
}

LinearMatrixExpr build_feedthrough_lmi(const LinearSystem& sys, const Matrix& p, const Matrix& q0,
                                       const Matrix& r, const SofOptions& options) {
    check_fixed_inputs(sys, p, q0, r);
    if (sys.mode != SystemMode::DirectFeedthrough) {
        throw InputError("build_feedthrough_lmi: system is not in direct-feedthrough mode");
    }
    if (options.q_variable) {
        throw InputError("build_feedthrough_lmi: Q as a variable is not supported with feedthrough");
    }
    require_riccati(sys, p, q0, r);
    const Index n = sys.n();
    const Index m = sys.m();
    const Index size = n + 2 * m;
    const auto layout = sof_layout(sys, false);
    const Matrix zero_gain = Matrix::Zero(m, sys.p());
    const Matrix g0 = feedthrough_corollary_block(sys, p, q0, r, zero_gain, options.drop_n_term);

    LinearMatrixExpr expr(layout.num_vars);
    const auto main = expr.add_block(g0);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < sys.p(); ++j) {
            // The corollary block is affine in F, so G(E) - G(0) is the coefficient of F(i,j).
            const Matrix e = unit_matrix(m, sys.p(), i, j);
            const Matrix g = feedthrough_corollary_block(sys, p, q0, r, e, options.drop_n_term) - g0;
            expr.set_coefficient(main, layout.f_index(i, j), symmetrize(g));
        }
    }
    expr.set_coefficient(main, layout.alpha, -Matrix::Identity(size, size));
    return expr;
}

SofResult synthesize_sof_feedthrough(const LinearSystem& sys, const Weights& weights,
                                     const SofOptions& options) {
    if (sys.mode != SystemMode::DirectFeedthrough) {
        throw InputError("synthesize_sof_feedthrough: system is not in direct-feedthrough mode");
    }
    SofResult res = prepare(sys, weights, options);
    const auto layout = sof_layout(sys, false);
    LinearMatrixExpr expr = build_feedthrough_lmi(sys, res.P, weights.Q, weights.R, options);
    const double radius = resolve_gain_radius(options, res.riccati.K);
    if (radius > 0.0) append_gain_ball(expr, layout, radius);

    const Matrix f0 = Matrix::Zero(sys.m(), sys.p());
    const Matrix g0 = feedthrough_corollary_block(sys, res.P, weights.Q, weights.R, f0, options.drop_n_term);
    const Vector start = pack_sof_point(layout, f0, min_eig_sym(g0) - 1.0);
    Vector objective = Vector::Zero(layout.num_vars);
    objective(layout.alpha) = 1.0;

    const auto sol = solve_sdp(expr, objective, /*maximize=*/true, start, options.sdp);
    finish(res, sol);
    if (res.status == SofStatus::Infeasible) return res;

    res.F = unpack_gain(layout, sol.x);
    res.alpha = sol.x(layout.alpha);
    res.Q_used = weights.Q;
    res.certificate_min_eig = min_eig_sym(
        feedthrough_corollary_block(sys, res.P, weights.Q, weights.R, res.F, options.drop_n_term));
    res.F_bar = feedthrough_gain(sys, res.F);
    const Matrix acl = sys.A + sys.B * res.F_bar;
    res.closed_loop_spectrum = general_eig(acl);
    res.closed_loop_abscissa = spectral_abscissa(acl);
    res.status = judge(res, options);
    return res;
}

SofResult synthesize(const LinearSystem& sys, const Weights& weights, const SofOptions& options) {
    if (sys.mode == SystemMode::DirectFeedthrough) return synthesize_sof_feedthrough(sys, weights, options);
    return synthesize_sof(sys, weights, options);
}

}  // namespace sofctl
