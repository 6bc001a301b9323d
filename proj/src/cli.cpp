#include "sofctl/cli.hpp"

#include <chrono>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "sofctl/error.hpp"
#include "sofctl/registry.hpp"
#include "sofctl/report.hpp"

namespace sofctl::cli {

namespace {

using io::json;
using Clock = std::chrono::steady_clock;

struct Globals {
    std::string system;
    std::string out;
    std::string format = "json";
    bool deterministic = false;
    std::optional<double> tol;
    std::string q_spec;
    std::string r_spec;
};

struct SofFlags {
    bool q_variable = false;
    bool drop_n = false;
    double alpha_margin = 0.0;
    bool strict = false;
    double gain_radius = 0.0;
};

struct SimFlags {
    std::string gain;
    bool simulate = false;
    std::uint64_t seed = 1;
    double dt = 0.0;  // 0 = default
    double horizon = 0.0;
    double amplitude = 1.0;
    double hold = 0.1;
    std::string x0;
    bool full = false;
};

io::SystemFile load_input(const Globals& g) {
    if (g.system.empty()) throw InputError("--system is required");
    // "example:<name>" refers to the built-in registry.
    if (g.system.rfind("example:", 0) == 0) return find_example(g.system.substr(8)).file;
    return io::load_system(g.system);
}

Weights resolve_weights(const io::SystemFile& file, const Globals& g) {
    const Index n = file.system.n();
    const Index m = file.system.m();
    Weights w;
    if (!g.q_spec.empty()) {
        w.Q = io::parse_weight_spec(g.q_spec, n, "Q");
    } else if (file.Q) {
        w.Q = *file.Q;
    } else {
        throw InputError("Q: not in the system file and no --Q given");
    }
    if (!g.r_spec.empty()) {
        w.R = io::parse_weight_spec(g.r_spec, m, "R");
    } else if (file.R) {
        w.R = *file.R;
    } else {
        throw InputError("R: not in the system file and no --R given");
    }
    w.validate(n, m);
    return w;
}

json input_echo(const io::SystemFile& file, const Weights& w) {
    io::SystemFile echo = file;
    echo.Q = w.Q;
    echo.R = w.R;
    return io::system_to_json(echo);
}

SofOptions sof_options(const SofFlags& f, const Globals& g) {
    SofOptions o;
    o.q_variable = f.q_variable;
    o.drop_n_term = f.drop_n;
    o.alpha_margin = f.alpha_margin;
    o.strict_assumptions = f.strict;
    o.gain_radius = f.gain_radius;
    if (g.tol) o.sdp.gap_tol = *g.tol;
    return o;
}

int status_code(SofStatus s) {
    switch (s) {
        case SofStatus::Stabilizing: return kStabilizing;
        case SofStatus::FeasibleButUnstable: return kUnstable;
        case SofStatus::Infeasible: return kInfeasible;
        case SofStatus::Error: return kNumericalFailure;
    }
    return kNumericalFailure;
}

Vector parse_vector(const std::string& text, Index size, const std::string& name) {
    if (text.empty()) return Vector::Ones(size);
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            values.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw InputError(name + ": cannot parse '" + item + "'");
        }
    }
    if (static_cast<Index>(values.size()) != size) {
        throw DimensionError(name + ": expected " + std::to_string(size) + " entries");
    }
    return Eigen::Map<Vector>(values.data(), size);
}

Matrix load_checked_gain(const std::string& path, const LinearSystem& sys) {
    if (path.empty()) throw InputError("--gain is required");
    Matrix f = path.rfind("example:", 0) == 0 ? find_example(path.substr(8)).published_gain
                                              : io::load_gain(path);
    if (f.rows() != sys.m() || f.cols() != sys.p()) {
        std::ostringstream os;
        os << "F: expected " << sys.m() << "x" << sys.p() << ", got " << f.rows() << "x" << f.cols();
        throw InputError(os.str());
    }
    return f;
}

struct Outcome {
    json payload;
    int code = kStabilizing;
};

Outcome cmd_lqr(const Globals& g, bool via_sdp) {
    const auto file = load_input(g);
    const Weights w = resolve_weights(file, g);
    const auto& sys = file.system;
    json j;
    j["input"] = input_echo(file, w);
    j["method"] = via_sdp ? "sdp" : "care";
    RiccatiSolution sol;
    if (via_sdp) {
        const auto r = lqr_sdp(sys.A, sys.B, w.Q, w.R);
        sol.P = r.P;
        sol.K = lqr_gain(r.P, sys.B, w.R);
        sol.residual_norm = care_residual(sys.A, sys.B, w.Q, w.R, r.P);
        j["sdp_iterations"] = r.iterations;
    } else {
        sol = solve_care(sys.A, sys.B, w.Q, w.R);
        j["warnings"] = sol.warnings;
    }
    j["riccati"] = report::riccati_to_json(sol);
    const Matrix acl = sys.A + sys.B * sol.K;
    j["closed_loop_spectrum"] = report::spectrum_to_json(general_eig(acl));
    j["closed_loop_abscissa"] = spectral_abscissa(acl);
    return {j, spectral_abscissa(acl) < 0.0 ? kStabilizing : kUnstable};
}

Outcome sof_outcome(const io::SystemFile& file, const Weights& w, const SofOptions& opts) {
    const SofResult res = synthesize(file.system, w, opts);
    json j;
    j["input"] = input_echo(file, w);
    j["options"] = report::options_to_json(opts);
    j["riccati"] = report::riccati_to_json(res.riccati);
    j["precheck"] = report::precheck_to_json(res.precheck);
    j["result"] = report::sof_result_to_json(res);
    j["warnings"] = res.warnings;
    return {j, status_code(res.status)};
}

Outcome cmd_sof(const Globals& g, const SofFlags& f) {
    const auto file = load_input(g);
    return sof_outcome(file, resolve_weights(file, g), sof_options(f, g));
}

Trajectory run_simulation(const LinearSystem& sys, const Matrix& f, const Matrix& p,
                          const SimFlags& s, bool disturbed) {
    SimulationSpec spec = default_simulation_spec(closed_loop_matrix(sys, f));
    if (s.dt > 0.0) spec.dt = s.dt;
    if (s.horizon > 0.0) spec.horizon = s.horizon;
    const Index wdim = disturbance_width(sys);
    const Disturbance w = disturbed ? piecewise_constant_disturbance(wdim, s.amplitude, s.hold, s.seed)
                                    : zero_disturbance(wdim);
    return simulate_closed_loop(sys, f, w, parse_vector(s.x0, sys.n(), "--x0"), spec, &p);
}

Outcome cmd_verify(const Globals& g, const SimFlags& s) {
    const auto file = load_input(g);
    const Weights w = resolve_weights(file, g);
    const auto& sys = file.system;
    const Matrix f = load_checked_gain(s.gain, sys);
    const auto care = solve_care(sys.A, sys.B, w.Q, w.R);
    const auto cert = certify_all(sys, w, f, care.P);

    json j;
    j["input"] = input_echo(file, w);
    j["F"] = io::matrix_to_json(f);
    j["P"] = io::matrix_to_json(care.P);
    j["certificates"] = report::certificate_to_json(cert);
    j["closed_loop_spectrum"] = report::spectrum_to_json(general_eig(closed_loop_matrix(sys, f)));
    bool pass = cert.stabilizing;
    if (s.simulate) {
        if (!cert.stabilizing) throw NumericalError("refusing to simulate an unstable loop");
        const auto disturbed = run_simulation(sys, f, care.P, s, true);
        auto audit = check_dissipation(disturbed, sys, care.P, w.R, g.tol.value_or(-1.0));
        const auto calm = run_simulation(sys, f, care.P, s, false);
        const bool decreasing = storage_strictly_decreasing(calm);
        json sim;
        sim["seed"] = s.seed;
        sim["samples"] = disturbed.size();
        sim["dissipation"] = report::dissipation_to_json(audit);
        sim["undisturbed_storage_decreasing"] = decreasing;
        j["simulation"] = sim;
        pass = pass && audit.ok && decreasing;
    }
    j["pass"] = pass;
    return {j, pass ? kStabilizing : kUnstable};
}

Outcome cmd_simulate(const Globals& g, const SimFlags& s) {
    const auto file = load_input(g);
    const auto& sys = file.system;
    const Matrix f = load_checked_gain(s.gain, sys);
    const Matrix acl = closed_loop_matrix(sys, f);
    SimulationSpec spec = default_simulation_spec(acl);
    if (s.dt > 0.0) spec.dt = s.dt;
    if (s.horizon > 0.0) spec.horizon = s.horizon;
    const Index wdim = disturbance_width(sys);
    const Disturbance w = s.simulate ? piecewise_constant_disturbance(wdim, s.amplitude, s.hold, s.seed)
                                     : zero_disturbance(wdim);
    const auto traj = simulate_closed_loop(sys, f, w, parse_vector(s.x0, sys.n(), "--x0"), spec);

    json j;
    j["F"] = io::matrix_to_json(f);
    j["dt"] = spec.dt;
    j["horizon"] = spec.horizon;
    j["disturbed"] = s.simulate;
    j["seed"] = s.seed;
    j["samples"] = traj.size();
    double peak = 0.0;
    for (const auto& x : traj.states) peak = std::max(peak, x.norm());
    j["max_state_norm"] = peak;
    j["final_state"] = std::vector<double>(traj.states.back().data(),
                                           traj.states.back().data() + traj.states.back().size());
    if (s.full) {
        json rows = json::array();
        for (std::size_t i = 0; i < traj.size(); ++i) {
            json row = json::array({traj.times[i]});
            for (Index k = 0; k < traj.states[i].size(); ++k) row.push_back(traj.states[i](k));
            rows.push_back(std::move(row));
        }
        j["trajectory"] = rows;
    }
    return {j, kStabilizing};
}

Outcome cmd_examples(const Globals& g, const std::string& name, const SofFlags& f) {
    if (name.empty()) {
        json list = json::array();
        for (const auto& ex : examples()) {
            list.push_back({{"name", ex.name},
                            {"provenance", ex.provenance},
                            {"published_gain", io::matrix_to_json(ex.published_gain)}});
        }
        return {json{{"examples", list}}, kStabilizing};
    }
    const auto& ex = find_example(name);
    Outcome o = sof_outcome(ex.file, resolve_weights(ex.file, g), sof_options(f, g));
    o.payload["example"] = ex.name;
    o.payload["published_gain"] = io::matrix_to_json(ex.published_gain);
    return o;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const InputError*>(&e) || dynamic_cast<const DimensionError*>(&e) ||
        dynamic_cast<const AssumptionError*>(&e) || dynamic_cast<const WellPosednessError*>(&e)) {
        return kInputError;
    }
    if (dynamic_cast<const InfeasibleError*>(&e)) return kInfeasible;
    return kNumericalFailure;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Static output feedback synthesis via Riccati-parameterized LMIs", "sofctl"};
    app.require_subcommand(1);
    // Global options may also follow the subcommand.
    app.fallthrough();
    app.set_version_flag("--version", report::kToolVersion);

    Globals g;
    app.add_option("--system", g.system, "system file, or example:<name>");
    app.add_option("--out", g.out, "write the report here instead of stdout");
    app.add_option("--format", g.format, "report format")->check(CLI::IsMember({"json", "text"}));
    app.add_flag("--deterministic", g.deterministic, "omit wall time from the report");
    app.add_option("--tol", g.tol, "SDP duality-gap tolerance; dissipation audit tolerance for verify");
    app.add_option("--Q", g.q_spec, "state weight: identity, diag:v1,v2,... or a JSON file");
    app.add_option("--R", g.r_spec, "input weight: identity, diag:v1,v2,... or a JSON file");

    auto* lqr = app.add_subcommand("lqr", "solve the LQR Riccati equation");
    bool via_sdp = false;
    lqr->add_flag("--via-sdp", via_sdp, "solve the SDP form instead of the Hamiltonian method");

    SofFlags sf;
    auto add_sof_flags = [&sf](CLI::App* sub) {
        sub->add_flag("--q-variable", sf.q_variable, "optimize Q under 0 <= Q <= Q0");
        sub->add_flag("--drop-n", sf.drop_n, "drop the N term from the LMI");
        sub->add_option("--alpha-margin", sf.alpha_margin, "alpha required by --strict");
        sub->add_flag("--strict", sf.strict, "assumption failures become errors");
        sub->add_option("--gain-radius", sf.gain_radius, "Frobenius bound on F (0 auto, <0 none)");
    };
    auto* sof = app.add_subcommand("sof", "synthesize a static output feedback gain");
    add_sof_flags(sof);

    SimFlags sim;
    auto add_sim_flags = [&sim](CLI::App* sub) {
        sub->add_option("--gain", sim.gain, "gain file, or example:<name> for a published gain");
        sub->add_option("--seed", sim.seed, "disturbance seed");
        sub->add_option("--dt", sim.dt, "step size (default from the closed loop)");
        sub->add_option("--T", sim.horizon, "horizon (default 20 time constants)");
        sub->add_option("--amplitude", sim.amplitude, "disturbance amplitude");
        sub->add_option("--hold", sim.hold, "disturbance hold time");
        sub->add_option("--x0", sim.x0, "initial state v1,v2,... (default all ones)");
    };
    auto* verify = app.add_subcommand("verify", "certify a given gain");
    add_sim_flags(verify);
    verify->add_flag("--simulate", sim.simulate, "add a simulated dissipation audit");

    auto* simulate = app.add_subcommand("simulate", "simulate the closed loop");
    add_sim_flags(simulate);
    simulate->add_flag("--disturbed", sim.simulate, "apply the seeded disturbance");
    simulate->add_flag("--full", sim.full, "include the sampled trajectory");

    std::string example_name;
    auto* ex = app.add_subcommand("examples", "list the built-in examples or run one");
    ex->add_option("name", example_name, "example to run");
    add_sof_flags(ex);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << report::kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "sofctl: " << e.what() << "\n";
        return kInputError;
    }

    const auto start = Clock::now();
    try {
        Outcome o;
        std::string command;
        if (lqr->parsed()) {
            command = "lqr";
            o = cmd_lqr(g, via_sdp);
        } else if (sof->parsed()) {
            command = "sof";
            o = cmd_sof(g, sf);
        } else if (verify->parsed()) {
            command = "verify";
            o = cmd_verify(g, sim);
        } else if (simulate->parsed()) {
            command = "simulate";
            o = cmd_simulate(g, sim);
        } else {
            command = "examples";
            o = cmd_examples(g, example_name, sf);
        }
        std::optional<double> wall;
        if (!g.deterministic) wall = std::chrono::duration<double>(Clock::now() - start).count();
        const std::string text = report::render(report::envelope(command, std::move(o.payload), wall), g.format);
        if (g.out.empty()) {
            out << text;
        } else {
            io::write_file(g.out, text);
        }
        return o.code;
    } catch (const std::exception& e) {
        err << "sofctl: " << e.what() << "\n";
        return classify(e);
    }
}

}  // namespace sofctl::cli
