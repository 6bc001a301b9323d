#include "sofctl/report.hpp"

#include <algorithm>
#include <sstream>

#include "sofctl/error.hpp"

namespace sofctl::report {

json spectrum_to_json(const Spectrum& s) {
    Spectrum sorted = s;
    std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
    json out = json::array();
    for (const auto& z : sorted) out.push_back(json::array({z.real(), z.imag()}));
    return out;
}

json riccati_to_json(const RiccatiSolution& r) {
    json j;
    j["P"] = io::matrix_to_json(r.P);
    j["K"] = io::matrix_to_json(r.K);
    j["residual"] = r.residual_norm;
    j["refinement_iterations"] = r.refinement_iterations;
    return j;
}

json precheck_to_json(const StructureReport& s) {
    json j;
    j["CB"] = io::matrix_to_json(s.cb_product);
    j["obstruction"] = s.obstruction;
    j["BtPB_min_eig"] = s.bpb_min_eig;
    j["structure_residual"] = s.structure_residual;
    if (s.obstruction) {
        j["note"] = "C B = 0, so R F C + B^T P = 0 has no solution and the LQR gain is not of the form F C";
    }
    return j;
}

json sof_result_to_json(const SofResult& res) {
    json j;
    j["status"] = to_string(res.status);
    j["sdp_status"] = to_string(res.sdp_status);
    j["sdp_iterations"] = res.sdp_iterations;
    if (res.status == SofStatus::Infeasible) return j;
    j["F"] = io::matrix_to_json(res.F);
    j["F_bar"] = io::matrix_to_json(res.F_bar);
    j["alpha"] = res.alpha;
    j["certificate_min_eig"] = res.certificate_min_eig;
    j["closed_loop_abscissa"] = res.closed_loop_abscissa;
    j["closed_loop_spectrum"] = spectrum_to_json(res.closed_loop_spectrum);
    j["Q_used"] = io::matrix_to_json(res.Q_used);
    return j;
}

json options_to_json(const SofOptions& o) {
    json j;
    j["q_variable"] = o.q_variable;
    j["drop_n"] = o.drop_n_term;
    j["alpha_margin"] = o.alpha_margin;
    j["strict"] = o.strict_assumptions;
    j["gain_radius"] = o.gain_radius;
    j["sdp_gap_tol"] = o.sdp.gap_tol;
    return j;
}

json certificate_to_json(const CertificateReport& c) {
    json j;
    j["lyapunov_max_eig"] = c.lyapunov_max_eig;
    j["dissipativity_min_eig"] = c.dissipativity_min_eig;
    j["abscissa"] = c.abscissa;
    j["riccati_residual"] = c.riccati_residual;
    j["equivalence_checked"] = c.equivalence_checked;
    j["equivalence_consistent"] = c.equivalence_consistent;
    j["stabilizing"] = c.stabilizing;
    return j;
}

json dissipation_to_json(const DissipationReport& d) {
    json j;
    j["max_violation"] = d.max_violation;
    j["tolerance"] = d.tolerance;
    j["samples_checked"] = d.samples_checked;
    j["worst_index"] = d.worst_index;
    j["ok"] = d.ok;
    return j;
}

json envelope(const std::string& command, json payload, std::optional<double> wall_seconds) {
    json j = std::move(payload);
    j["tool"] = {{"name", "sofctl"}, {"version", kToolVersion}};
    j["command"] = command;
    if (wall_seconds) j["wall_time_s"] = *wall_seconds;
    return j;
}

namespace {

std::string scalar_text(const json& v) {
    if (v.is_number_float()) return io::format_double(v.get<double>());
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

bool is_numeric_row(const json& v) {
    return v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); });
}

void flatten(const json& v, const std::string& path, std::ostringstream& os) {
    if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) {
            flatten(it.value(), path.empty() ? it.key() : path + "." + it.key(), os);
        }
        return;
    }
    if (v.is_array() && !v.empty() && std::all_of(v.begin(), v.end(), is_numeric_row)) {
        os << path << ":\n";
        for (const auto& row : v) {
            os << "   ";
            for (const auto& e : row) os << " " << scalar_text(e);
            os << "\n";
        }
        return;
    }
    if (v.is_array() && !v.empty() && !is_numeric_row(v)) {
        for (std::size_t i = 0; i < v.size(); ++i) flatten(v[i], path + "[" + std::to_string(i) + "]", os);
        return;
    }
    if (v.is_array()) {
        os << path << ":";
        for (const auto& e : v) os << " " << scalar_text(e);
        os << "\n";
        return;
    }
    os << path << ": " << scalar_text(v) << "\n";
}

}  // namespace

std::string render(const json& report, const std::string& format) {
    if (format == "json") return report.dump(2) + "\n";
    if (format == "text") {
        std::ostringstream os;
        flatten(report, "", os);
        return os.str();
    }
    throw InputError("unknown format '" + format + "' (json or text)");
}

}  // namespace sofctl::report
