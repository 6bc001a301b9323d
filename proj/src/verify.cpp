#include "sofctl/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include "sofctl/error.hpp"
#include "sofctl/sof.hpp"

namespace sofctl {

Matrix closed_loop_matrix(const LinearSystem& sys, const Matrix& f) {
    sys.validate();
    if (f.rows() != sys.m() || f.cols() != sys.p()) {
        throw DimensionError("F: shape does not match m x p");
    }
    if (sys.mode == SystemMode::DirectFeedthrough) return sys.A + sys.B * feedthrough_gain(sys, f);
    return sys.A + sys.B * f * sys.C;
}

Disturbance piecewise_constant_disturbance(Index dim, double amplitude, double hold,
                                           std::uint64_t seed) {
    if (!(hold > 0.0)) throw DimensionError("piecewise_constant_disturbance: hold must be positive");
    // Levels are drawn lazily but in order, so the signal only depends on the seed.
    struct State {
        std::mt19937_64 rng;
        std::vector<Vector> levels;
    };
    auto state = std::make_shared<State>(State{std::mt19937_64(seed), {}});
    return [state, dim, amplitude, hold](double t) -> Vector {
        const auto slot = static_cast<std::size_t>(std::max(0.0, std::floor(t / hold + 1e-9)));
        std::uniform_real_distribution<double> dist(-amplitude, amplitude);
        while (state->levels.size() <= slot) {
            Vector v(dim);
            for (Index i = 0; i < dim; ++i) v(i) = dist(state->rng);
            state->levels.push_back(std::move(v));
        }
        return state->levels[slot];
    };
}

Disturbance zero_disturbance(Index dim) {
    return [dim](double) { return Vector::Zero(dim); };
}

SimulationSpec default_simulation_spec(const Matrix& a_cl) {
    SimulationSpec spec;
    spec.dt = 1e-3 / std::max(1.0, a_cl.norm());
    const double abscissa = spectral_abscissa(a_cl);
    spec.horizon = abscissa < 0.0 ? std::min(20.0 / -abscissa, 1e3) : 10.0;
    return spec;
}

Index disturbance_width(const LinearSystem& sys) {
    return sys.mode == SystemMode::MeasurementDisturbance ? sys.D.cols() : sys.m();
}

Trajectory simulate_closed_loop(const LinearSystem& sys, const Matrix& f, const Disturbance& w,
                                const Vector& x0, const SimulationSpec& spec,
                                const Matrix* storage_weight) {
    sys.validate();
    if (f.rows() != sys.m() || f.cols() != sys.p()) throw DimensionError("F: shape does not match m x p");
    if (x0.size() != sys.n()) throw DimensionError("x0: length differs from n");
    if (!(spec.dt > 0.0) || !(spec.horizon >= spec.dt)) {
        throw DimensionError("simulation needs dt > 0 and horizon >= dt");
    }
    if (storage_weight && (storage_weight->rows() != sys.n() || storage_weight->cols() != sys.n())) {
        throw DimensionError("P: expected n x n");
    }

    const Index wdim = disturbance_width(sys);
    Matrix state_gain;  // u = state_gain x + dist_gain w
    Matrix dist_gain = Matrix::Zero(sys.m(), wdim);
    switch (sys.mode) {
        case SystemMode::NoD: state_gain = f * sys.C; break;
        case SystemMode::MeasurementDisturbance:
            state_gain = f * sys.C;
            dist_gain = f * sys.D;
            break;
        case SystemMode::DirectFeedthrough: state_gain = feedthrough_gain(sys, f); break;
    }

    auto sample_w = [&](double t) {
        Vector v = w ? w(t) : Vector::Zero(wdim);
        if (v.size() != wdim) throw DimensionError("disturbance sample has the wrong width");
        return v;
    };
    auto input = [&](const Vector& x, const Vector& wv) -> Vector {
        return state_gain * x + dist_gain * wv;
    };
    auto rhs = [&](const Vector& x, const Vector& wv) -> Vector { return sys.A * x + sys.B * input(x, wv); };

    const auto steps = static_cast<std::size_t>(std::llround(spec.horizon / spec.dt));
    Trajectory traj;
    traj.times.reserve(steps + 1);
    traj.states.reserve(steps + 1);
    Vector x = x0;
    auto record = [&](double t, const Vector& xs) {
        const Vector wv = sample_w(t);
        traj.times.push_back(t);
        traj.states.push_back(xs);
        traj.disturbances.push_back(wv);
        traj.inputs.push_back(input(xs, wv));
        if (storage_weight) traj.storage.push_back(xs.dot(*storage_weight * xs));
    };
    record(0.0, x);
    const double h = spec.dt;
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * h;
        // Disturbance is sampled at the left end of each step and held across it.
        const Vector wv = sample_w(t);
        const Vector k1 = rhs(x, wv);
        const Vector k2 = rhs(x + 0.5 * h * k1, wv);
        const Vector k3 = rhs(x + 0.5 * h * k2, wv);
        const Vector k4 = rhs(x + h * k3, wv);
        x += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!x.allFinite()) {
            std::ostringstream os;
            os << "simulation diverged: non-finite state at sample " << (k + 1);
            throw NumericalError(os.str());
        }
        record(static_cast<double>(k + 1) * h, x);
    }
    return traj;
}

DissipationReport check_dissipation(const Trajectory& traj, const LinearSystem& sys,
                                    const Matrix& p, const Matrix& r, double tolerance) {
    const std::size_t len = traj.times.size();
    if (traj.states.size() != len || traj.inputs.size() != len || traj.disturbances.size() != len) {
        throw DimensionError("check_dissipation: trajectory fields have different lengths");
    }
    if (p.rows() != sys.n() || p.cols() != sys.n()) throw DimensionError("P: expected n x n");

    DissipationReport rep;
    rep.tolerance = tolerance >= 0.0 ? tolerance : 1e-7 * (1.0 + p.norm());
    rep.max_violation = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < len; ++i) {
        const Vector& x = traj.states[i];
        const Vector& u = traj.inputs[i];
        const Vector& w = traj.disturbances[i];
        if (w.size() != r.rows()) {
            throw DimensionError("check_dissipation: supply weight R does not match the disturbance width");
        }
        if (x.norm() + w.norm() < 1e-12) continue;
        const double vdot = 2.0 * x.dot(p * (sys.A * x + sys.B * u));
        const double violation = vdot - w.dot(r * w);
        ++rep.samples_checked;
        if (violation > rep.max_violation) {
            rep.max_violation = violation;
            rep.worst_index = i;
        }
    }
    if (rep.samples_checked == 0) rep.max_violation = 0.0;
    rep.ok = rep.max_violation < rep.tolerance;
    return rep;
}

bool storage_strictly_decreasing(const Trajectory& traj, double tol) {
    if (traj.storage.size() < 2) return true;
    const double slack = tol * traj.storage.front();
    for (std::size_t i = 1; i < traj.storage.size(); ++i) {
        if (!(traj.storage[i] - traj.storage[i - 1] < slack)) return false;
    }
    return true;
}

CertificateReport certify_all(const LinearSystem& sys, const Weights& weights, const Matrix& f,
                              const Matrix& p) {
    sys.validate();
    weights.validate(sys.n(), sys.m());
    CertificateReport rep;
    rep.riccati_residual = care_residual(sys.A, sys.B, weights.Q, weights.R, p);
    const double rel_residual = rep.riccati_residual / care_residual_scale(sys.A, p);

    const Matrix acl = closed_loop_matrix(sys, f);
    rep.abscissa = spectral_abscissa(acl);
    rep.lyapunov_max_eig = max_eig_sym(symmetrize(acl.transpose() * p + p * acl));
    if (sys.mode == SystemMode::DirectFeedthrough) {
        rep.dissipativity_min_eig = feedthrough_bmi_min_eig(sys, p, weights.Q, weights.R, f);
    } else {
        rep.dissipativity_min_eig = min_eig_sym(dissipativity_block(sys, p, weights.Q, weights.R, f));
    }
    rep.stabilizing = rep.abscissa < -1e-9;

    const bool d_zero = sys.mode == SystemMode::NoD ||
                        (sys.mode == SystemMode::MeasurementDisturbance && sys.D.norm() == 0.0);
    if (d_zero && rel_residual < 1e-10) {
        rep.equivalence_checked = true;
        const double margin = 1e-7;
        if (std::abs(rep.dissipativity_min_eig) > margin && std::abs(rep.lyapunov_max_eig) > margin) {
            rep.equivalence_consistent = (rep.dissipativity_min_eig > 0.0) == (rep.lyapunov_max_eig < 0.0);
        }
    }
    return rep;
}

}  // namespace sofctl
