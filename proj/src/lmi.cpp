#include "sofctl/lmi.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "sofctl/error.hpp"

namespace sofctl {

Index LinearMatrixExpr::total_dimension() const {
    Index total = 0;
    for (const auto& b : blocks_) total += b.size();
    return total;
}

std::size_t LinearMatrixExpr::add_block(const Matrix& constant) {
    if (constant.rows() != constant.cols()) {
        throw DimensionError("LinearMatrixExpr::add_block: constant term must be square");
    }
    const Index k = constant.rows();
    blocks_.push_back(
        LmiBlock{constant, std::vector<Matrix>(static_cast<std::size_t>(num_vars_), Matrix::Zero(k, k))});
    return blocks_.size() - 1;
}

void LinearMatrixExpr::set_coefficient(std::size_t block, Index var, const Matrix& g) {
    if (block >= blocks_.size() || var < 0 || var >= num_vars_) {
        throw DimensionError("LinearMatrixExpr::set_coefficient: index out of range");
    }
    auto& b = blocks_[block];
    if (g.rows() != b.size() || g.cols() != b.size()) {
        throw DimensionError("LinearMatrixExpr::set_coefficient: coefficient has wrong size");
    }
    b.coefficients[static_cast<std::size_t>(var)] = g;
}

void LinearMatrixExpr::add_to_coefficient(std::size_t block, Index var, const Matrix& g) {
    if (block >= blocks_.size() || var < 0 || var >= num_vars_) {
        throw DimensionError("LinearMatrixExpr::add_to_coefficient: index out of range");
    }
    auto& b = blocks_[block];
    if (g.rows() != b.size() || g.cols() != b.size()) {
        throw DimensionError("LinearMatrixExpr::add_to_coefficient: coefficient has wrong size");
    }
    b.coefficients[static_cast<std::size_t>(var)] += g;
}

void LinearMatrixExpr::add_to_constant(std::size_t block, const Matrix& g) {
    if (block >= blocks_.size()) {
        throw DimensionError("LinearMatrixExpr::add_to_constant: index out of range");
    }
    auto& b = blocks_[block];
    if (g.rows() != b.size() || g.cols() != b.size()) {
        throw DimensionError("LinearMatrixExpr::add_to_constant: term has wrong size");
    }
    b.constant += g;
}

void LinearMatrixExpr::append_variables(Index count) {
    for (auto& b : blocks_) {
        for (Index i = 0; i < count; ++i) b.coefficients.push_back(Matrix::Zero(b.size(), b.size()));
    }
    num_vars_ += count;
}

void LinearMatrixExpr::validate() const {
    for (std::size_t bi = 0; bi < blocks_.size(); ++bi) {
        const auto& b = blocks_[bi];
        std::ostringstream where;
        where << "LinearMatrixExpr block " << bi;
        if (b.constant.rows() != b.constant.cols()) {
            throw DimensionError(where.str() + ": constant term not square");
        }
        if (!b.constant.allFinite() || relative_asymmetry(b.constant) > 1e-12) {
            throw DimensionError(where.str() + ": constant term not finite symmetric");
        }
        if (static_cast<Index>(b.coefficients.size()) != num_vars_) {
            throw DimensionError(where.str() + ": coefficient count differs from num_vars");
        }
        for (const auto& g : b.coefficients) {
            if (g.rows() != b.size() || g.cols() != b.size()) {
                throw DimensionError(where.str() + ": coefficient has wrong size");
            }
            if (!g.allFinite() || relative_asymmetry(g) > 1e-12) {
                throw DimensionError(where.str() + ": coefficient not finite symmetric");
            }
        }
    }
}

std::vector<Matrix> eval_lmi(const LinearMatrixExpr& expr, const Vector& x) {
    if (x.size() != expr.num_vars()) {
        throw DimensionError("eval_lmi: variable vector length differs from num_vars");
    }
    std::vector<Matrix> out;
    out.reserve(expr.num_blocks());
    for (const auto& b : expr.blocks()) {
        Matrix g = b.constant;
        for (Index i = 0; i < x.size(); ++i) {
            if (x(i) != 0.0) g += x(i) * b.coefficients[static_cast<std::size_t>(i)];
        }
        out.push_back(symmetrize(g));
    }
    return out;
}

double lmi_min_eig(const LinearMatrixExpr& expr, const Vector& x) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& g : eval_lmi(expr, x)) {
        if (g.rows() > 0) best = std::min(best, min_eig_sym(g));
    }
    return best;
}

const char* to_string(SdpStatus status) {
    switch (status) {
        case SdpStatus::Optimal: return "optimal";
        case SdpStatus::Infeasible: return "infeasible";
        case SdpStatus::MaxIterations: return "max-iterations";
        case SdpStatus::NumericalFailure: return "numerical-failure";
    }
    return "unknown";
}

namespace {

// Cholesky factors of every block at a point, or nothing if some block is not PD.
struct BarrierPoint {
    std::vector<Eigen::LLT<Matrix>> factors;
    double logdet = 0.0;
};

std::optional<BarrierPoint> factor_at(const LinearMatrixExpr& expr, const Vector& x) {
    BarrierPoint pt;
    pt.factors.reserve(expr.num_blocks());
    for (const auto& g : eval_lmi(expr, x)) {
        Eigen::LLT<Matrix> llt(g);
        if (llt.info() != Eigen::Success) return std::nullopt;
        const Vector diag = llt.matrixLLT().diagonal();
        double ld = 0.0;
        for (Index i = 0; i < diag.size(); ++i) {
            if (!(diag(i) > 0.0)) return std::nullopt;
            ld += 2.0 * std::log(diag(i));
        }
        pt.logdet += ld;
        pt.factors.push_back(std::move(llt));
    }
    return pt;
}

struct PathOutcome {
    Vector x;
    SdpStatus status = SdpStatus::NumericalFailure;
    int newton_steps = 0;
    int outer = 0;
    double t = 0.0;
    double decrement = 0.0;
    bool stopped_early = false;
    std::vector<double> history;
    std::string message;
};

// Solves (D^-1 H D^-1 + delta I) y = -D^-1 g, returning D^-1 y.
std::optional<Vector> newton_direction(const Matrix& hess, const Vector& grad, double floor) {
    const Index k = hess.rows();
    Vector scale(k);
    for (Index i = 0; i < k; ++i) {
        const double h = hess(i, i);
        scale(i) = h > 0.0 ? 1.0 / std::sqrt(h) : 1.0;
    }
    const Matrix scaled = scale.asDiagonal() * hess * scale.asDiagonal();
    const Vector rhs = -(scale.asDiagonal() * grad);
    for (double delta = floor; delta <= 1e-2; delta *= 100.0) {
        Eigen::LLT<Matrix> llt(scaled + delta * Matrix::Identity(k, k));
        if (llt.info() != Eigen::Success) continue;
        Vector y = llt.solve(rhs);
        if (!y.allFinite()) continue;
        return Vector(scale.asDiagonal() * y);
    }
    return std::nullopt;
}

// Minimizes f^T x over {G(x) > 0} along the central path.
PathOutcome follow_path(const LinearMatrixExpr& expr, const Vector& f, Vector x,
                        const SdpSettings& settings,
                        const std::function<bool(const Vector&)>& stop_early) {
    PathOutcome out;
    const Index nv = expr.num_vars();
    const double dim = static_cast<double>(expr.total_dimension());
    double t = settings.t0;

    auto current = factor_at(expr, x);
    if (!current) {
        out.x = x;
        out.message = "starting point is not strictly feasible";
        return out;
    }

    for (int outer = 0; outer < settings.max_outer; ++outer) {
        out.outer = outer + 1;
        bool centered = false;
        double decrement2 = 0.0;
        for (int inner = 0; inner < settings.max_inner; ++inner) {
            Vector grad = t * f;
            Matrix hess = Matrix::Zero(nv, nv);
            std::vector<Matrix> w(static_cast<std::size_t>(nv));
            for (std::size_t b = 0; b < expr.num_blocks(); ++b) {
                const auto& block = expr.blocks()[b];
                const auto& llt = current->factors[b];
                for (Index i = 0; i < nv; ++i) {
                    w[static_cast<std::size_t>(i)] = llt.solve(block.coefficients[static_cast<std::size_t>(i)]);
                    grad(i) -= w[static_cast<std::size_t>(i)].trace();
                }
                for (Index i = 0; i < nv; ++i) {
                    const auto& wi = w[static_cast<std::size_t>(i)];
                    for (Index k = i; k < nv; ++k) {
                        const double h = wi.cwiseProduct(w[static_cast<std::size_t>(k)].transpose()).sum();
                        hess(i, k) += h;
                        if (k != i) hess(k, i) += h;
                    }
                }
            }
            auto dir = newton_direction(hess, grad, settings.damping_floor);
            if (!dir) {
                out.x = x;
                out.message = "Newton system could not be factored";
                return out;
            }
            const Vector& dx = *dir;
            const double slope = grad.dot(dx);
            decrement2 = -slope;
            if (decrement2 / 2.0 <= settings.decrement_tol) {
                centered = true;
                break;
            }

            double step = 1.0;
            bool accepted = false;
            for (int ls = 0; ls < 80; ++ls, step *= 0.5) {
                Vector trial = x + step * dx;
                auto pt = factor_at(expr, trial);
                if (!pt) continue;
                const double df = t * f.dot(step * dx) - (pt->logdet - current->logdet);
                if (df <= 0.25 * step * slope) {
                    x = std::move(trial);
                    current = std::move(pt);
                    accepted = true;
                    break;
                }
            }
            ++out.newton_steps;
            if (accepted && !(std::abs(f.dot(x)) <= settings.objective_limit)) {
                out.x = x;
                out.t = t;
                out.message = "objective appears unbounded";
                return out;
            }
            if (!accepted) {
                // Round-off floor: the barrier cannot be decreased any further at this t.
                if (decrement2 / 2.0 < 1e-6) {
                    centered = true;
                    break;
                }
                out.x = x;
                out.t = t;
                out.decrement = std::sqrt(std::max(decrement2, 0.0));
                out.message = "line search failed";
                return out;
            }
            if (stop_early && stop_early(x)) {
                out.x = x;
                out.t = t;
                out.stopped_early = true;
                out.status = SdpStatus::Optimal;
                return out;
            }
        }
        out.decrement = std::sqrt(std::max(decrement2, 0.0));
        out.t = t;
        out.history.push_back(f.dot(x));
        if (!centered) {
            out.x = x;
            out.status = SdpStatus::MaxIterations;
            out.message = "centering did not converge within the inner iteration cap";
            return out;
        }
        if (std::abs(f.dot(x)) > settings.objective_limit) {
            out.x = x;
            out.message = "objective appears unbounded";
            return out;
        }
        if (dim / t < settings.gap_tol) {
            out.x = x;
            out.status = SdpStatus::Optimal;
            return out;
        }
        t *= settings.mu;
    }
    out.x = x;
    out.status = SdpStatus::MaxIterations;
    out.message = "outer iteration cap reached";
    return out;
}

// max s s.t. G(x) - s I > 0, stopping as soon as s > 0.
struct PhaseOne {
    std::optional<Vector> start;
    int newton_steps = 0;
    SdpStatus status = SdpStatus::Infeasible;
    std::string message;
};

PhaseOne phase_one(const LinearMatrixExpr& expr, const SdpSettings& settings) {
    const Index nv = expr.num_vars();
    LinearMatrixExpr aug = expr;
    aug.append_variables(1);
    for (std::size_t b = 0; b < aug.num_blocks(); ++b) {
        const Index k = aug.blocks()[b].size();
        aug.set_coefficient(b, nv, -Matrix::Identity(k, k));
    }
    Vector z = Vector::Zero(nv + 1);
    z(nv) = lmi_min_eig(expr, Vector::Zero(nv)) - 1.0;
    Vector f = Vector::Zero(nv + 1);
    f(nv) = -1.0;

    auto path = follow_path(aug, f, z, settings, [nv](const Vector& v) { return v(nv) > 0.0; });
    PhaseOne out;
    out.newton_steps = path.newton_steps;
    if (path.stopped_early) {
        out.start = path.x.head(nv);
        out.status = SdpStatus::Optimal;
        return out;
    }
    if (path.status == SdpStatus::Optimal) {
        const double s = path.x(nv);
        std::ostringstream os;
        os << "phase 1 optimum margin " << s << " certifies infeasibility";
        out.status = s < 1e-10 ? SdpStatus::Infeasible : SdpStatus::NumericalFailure;
        out.message = os.str();
        return out;
    }
    out.status = path.status;
    out.message = "phase 1: " + path.message;
    return out;
}

}  // namespace

SdpSolution solve_sdp(const LinearMatrixExpr& expr_in, const Vector& objective, bool maximize,
                      const std::optional<Vector>& strictly_feasible_start,
                      const SdpSettings& settings) {
    expr_in.validate();
    const Index nv = expr_in.num_vars();
    if (objective.size() != nv) {
        throw DimensionError("solve_sdp: objective length differs from num_vars");
    }

    LinearMatrixExpr expr = expr_in;
    if (settings.strictness_margin != 0.0) {
        for (std::size_t b = 0; b < expr.num_blocks(); ++b) {
            const Index k = expr.blocks()[b].size();
            expr.add_to_constant(b, -settings.strictness_margin * Matrix::Identity(k, k));
        }
    }

    SdpSolution sol;
    sol.x = Vector::Zero(nv);

    Vector start;
    if (strictly_feasible_start) {
        if (strictly_feasible_start->size() != nv) {
            throw DimensionError("solve_sdp: starting point length differs from num_vars");
        }
        start = *strictly_feasible_start;
    }
    if (!strictly_feasible_start || !factor_at(expr, start)) {
        const Vector zero = Vector::Zero(nv);
        if (factor_at(expr, zero)) {
            start = zero;
        } else {
            auto p1 = phase_one(expr, settings);
            sol.iterations += p1.newton_steps;
            if (!p1.start) {
                sol.status = p1.status;
                sol.message = p1.message;
                sol.min_constraint_eig = lmi_min_eig(expr, sol.x);
                return sol;
            }
            start = *p1.start;
        }
    }

    const Vector f = maximize ? Vector(-objective) : objective;
    auto path = follow_path(expr, f, start, settings, {});
    sol.x = path.x;
    sol.status = path.status;
    sol.iterations += path.newton_steps;
    sol.outer_iterations = path.outer;
    sol.barrier_t = path.t;
    sol.final_decrement = path.decrement;
    sol.message = path.message;
    sol.objective = objective.dot(sol.x);
    for (double h : path.history) sol.objective_history.push_back(maximize ? -h : h);
    if (!sol.x.allFinite()) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "iterate became non-finite";
        sol.min_constraint_eig = std::numeric_limits<double>::quiet_NaN();
        return sol;
    }
    sol.min_constraint_eig = lmi_min_eig(expr, sol.x);
    if (sol.status == SdpStatus::Optimal && sol.min_constraint_eig < -settings.feasibility_tol) {
        sol.status = SdpStatus::NumericalFailure;
        sol.message = "final point violates the constraint";
    }
    return sol;
}

Index packed_size(Index n) {
    return n * (n + 1) / 2;
}

Matrix packed_basis(Index n, Index k) {
    Index idx = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j, ++idx) {
            if (idx == k) {
                Matrix e = Matrix::Zero(n, n);
                e(i, j) = 1.0;
                e(j, i) = 1.0;
                return e;
            }
        }
    }
    throw DimensionError("packed_basis: index out of range");
}

Matrix unpack_symmetric(const Vector& x, Index offset, Index n) {
    if (offset < 0 || offset + packed_size(n) > x.size()) {
        throw DimensionError("unpack_symmetric: vector too short");
    }
    Matrix s(n, n);
    Index idx = offset;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j, ++idx) {
            s(i, j) = x(idx);
            s(j, i) = x(idx);
        }
    }
    return s;
}

Vector pack_symmetric(const Matrix& s) {
    const Index n = s.rows();
    Vector x(packed_size(n));
    Index idx = 0;
    for (Index i = 0; i < n; ++i) {
        for (Index j = i; j < n; ++j, ++idx) x(idx) = 0.5 * (s(i, j) + s(j, i));
    }
    return x;
}

Matrix schur_complement(const Matrix& m, Index partition) {
    if (m.rows() != m.cols() || partition < 0 || partition > m.rows()) {
        throw DimensionError("schur_complement: bad shape or partition");
    }
    const Index k = m.rows() - partition;
    const Matrix x = m.topLeftCorner(partition, partition);
    if (k == 0) return x;
    const Matrix y = m.topRightCorner(partition, k);
    const Matrix z = m.bottomRightCorner(k, k);
    if (rcond_estimate(z) < 1e-12) {
        throw NumericalError("schur_complement: trailing block is singular to tolerance");
    }
    return symmetrize(x - y * solve_linear(z, y.transpose()));
}

bool psd_test_nonstrict(const Matrix& m, Index partition, double tol) {
    if (m.rows() != m.cols() || partition < 0 || partition > m.rows()) {
        throw DimensionError("psd_test_nonstrict: bad shape or partition");
    }
    const Index k = m.rows() - partition;
    if (m.rows() == 0) return true;
    const Matrix ms = symmetrize(m);
    const Matrix x = ms.topLeftCorner(partition, partition);
    const Matrix y = ms.topRightCorner(partition, k);
    const Matrix z = ms.bottomRightCorner(k, k);

    Matrix zpinv = Matrix::Zero(k, k);
    Matrix range_proj = Matrix::Zero(k, k);
    if (k > 0) {
        const auto ez = sym_eig(z);
        if (ez.values(0) < -tol) return false;
        for (Index i = 0; i < k; ++i) {
            if (ez.values(i) > tol) {
                const Vector v = ez.vectors.col(i);
                zpinv += (v * v.transpose()) / ez.values(i);
                range_proj += v * v.transpose();
            }
        }
    }
    if (partition == 0) return true;
    if (k > 0) {
        const Matrix leak = y * (Matrix::Identity(k, k) - range_proj);
        if (leak.norm() > tol) return false;
    }
    const Matrix s = symmetrize(x - y * zpinv * y.transpose());
    return min_eig_sym(s) >= -tol;
}

}  // namespace sofctl
