#pragma once

#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>

#include "aso/simulation.hpp"

namespace aso {

using json = nlohmann::json;

inline json to_json(const Vector& v) {
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

inline json to_json(const GainCertificate& c) {
    return json{{"pass", c.pass()},
                {"cooperative_lower", c.cooperative_lower},
                {"cooperative_upper", c.cooperative_upper},
                {"hurwitz_lower", c.hurwitz_lower},
                {"hurwitz_upper", c.hurwitz_upper},
                {"G_nonnegative", c.G_nonnegative},
                {"worst_offdiag_entry", c.worst_offdiag_entry},
                {"max_eig_realpart", c.max_eig_realpart},
                {"samples_used", c.samples_used}};
}

inline json to_json(const DetectionDelays& d) {
    const auto opt = [](const std::optional<double>& v) {
        return v ? json(*v) : json(nullptr);
    };
    const auto rows = [&](const std::vector<std::vector<std::optional<double>>>& m) {
        json out = json::array();
        for (const auto& row : m) {
            json r = json::array();
            for (const auto& v : row) r.push_back(opt(v));
            out.push_back(r);
        }
        return out;
    };
    const auto flat = [&](const std::vector<std::optional<double>>& m) {
        json out = json::array();
        for (const auto& v : m) out.push_back(opt(v));
        return out;
    };
    return json{{"s", rows(d.s)}, {"d", rows(d.d)}, {"z", rows(d.z)},
                {"S", flat(d.S)}, {"D", flat(d.D)}, {"Z", flat(d.Z)}};
}

struct FalseAlarmCounts {
    std::size_t S = 0, D = 0, Z = 0;
    double window_start = 0.0, window_end = 0.0;
};

// False-alarm counting over a known fault-free window [t0, t1).
inline FalseAlarmCounts count_false_alarms(const RunResult& rr, double t0, double t1) {
    FalseAlarmCounts fa;
    fa.window_start = t0;
    fa.window_end = t1;
    fa.S = count_high(rr.indicators.times, rr.indicators.S, t0, t1);
    fa.D = count_high(rr.indicators.times, rr.indicators.D, t0, t1);
    fa.Z = count_high(rr.indicators.times, rr.indicators.Z, t0, t1);
    return fa;
}

inline json run_report_json(const RunResult& rr, const Scenario& sc) {
    json phases = json::array();
    for (const auto& ph : rr.stats.phases) {
        phases.push_back(json{
            {"t_start", ph.t_start},
            {"t_end", ph.t_end},
            {"window_samples", ph.window_total},
            {"branch_expected_frac",
             ph.window_total ? static_cast<double>(ph.branch_expected) / ph.window_total : 0.0},
            {"order_present_frac",
             ph.window_total ? static_cast<double>(ph.order_present) / ph.window_total : 0.0},
            {"theta_contained_frac",
             ph.window_total ? static_cast<double>(ph.theta_contained) / ph.window_total : 0.0}});
    }
    const auto& fr = rr.final_report;
    json final_rep{
        {"pe_ok_m", fr.pe_ok_m},
        {"pe_ok_M", fr.pe_ok_M},
        {"pe_level_m", fr.pe_level_m},
        {"pe_level_M", fr.pe_level_M},
        {"branch", fr.branch_token()},
        {"coop_instant_ok", fr.coop_instant_ok},
        {"coop_periodic_ok", fr.coop_periodic_ok},
        {"valid", fr.valid}};
    if (fr.theta_bar_m) final_rep["theta_bar_inf_m"] = to_json(*fr.theta_bar_m);
    if (fr.theta_bar_M) final_rep["theta_bar_inf_M"] = to_json(*fr.theta_bar_M);

    double first_fault = rr.horizon;
    if (!sc.fault_times.empty()) first_fault = sc.fault_times.front();
    const FalseAlarmCounts fa =
        count_false_alarms(rr, sc.expected.containment_transient, first_fault);

    return json{{"scenario", rr.scenario},
                {"horizon", rr.horizon},
                {"step", rr.step},
                {"steps", rr.steps},
                {"wall_seconds", rr.wall_seconds},
                {"gain_certification", to_json(rr.gain_cert)},
                {"final_conditions", final_rep},
                {"phases", phases},
                {"x_contained_frac",
                 rr.stats.x_total ? static_cast<double>(rr.stats.x_contained) / rr.stats.x_total
                                  : 0.0},
                {"pe_ok_frac",
                 rr.stats.pe_total ? static_cast<double>(rr.stats.pe_ok) / rr.stats.pe_total : 0.0},
                {"valid_frac",
                 rr.stats.samples ? static_cast<double>(rr.stats.valid_samples) / rr.stats.samples
                                  : 0.0},
                {"max_state_norm", rr.stats.max_state_norm},
                {"max_observer_norm", rr.stats.max_observer_norm},
                {"false_alarms_prefault",
                 json{{"S", fa.S}, {"D", fa.D}, {"Z", fa.Z},
                      {"window", json::array({fa.window_start, fa.window_end})}}},
                {"detection_delays", to_json(rr.delays)},
                {"fault_times", sc.fault_times}};
}

inline std::string run_report_text(const RunResult& rr, const Scenario& sc) {
    std::ostringstream os;
    os << "scenario " << rr.scenario << ": " << rr.steps << " steps, horizon " << rr.horizon
       << " s, wall " << rr.wall_seconds << " s\n";
    os << "gain certification: " << (rr.gain_cert.pass() ? "PASS" : "FAIL") << "\n";
    const auto& fr = rr.final_report;
    os << "final conditions: branch=" << fr.branch_token() << " pe=("
       << fr.pe_ok_m << "," << fr.pe_ok_M << ") valid=" << fr.valid << "\n";
    for (std::size_t i = 0; i < rr.stats.phases.size(); ++i) {
        const auto& ph = rr.stats.phases[i];
        if (!ph.window_total) continue;
        os << "phase " << i << " [" << ph.t_start << "," << ph.t_end << "): ";
        if (i < sc.expected.branch_per_phase.size())
            os << "branch-expected " << 100.0 * ph.branch_expected / ph.window_total << "%, ";
        os << "theta contained " << 100.0 * ph.theta_contained / ph.window_total << "%\n";
    }
    if (rr.stats.x_total)
        os << "state envelope containment: "
           << 100.0 * rr.stats.x_contained / rr.stats.x_total << "%\n";
    for (std::size_t f = 0; f < rr.delays.S.size(); ++f) {
        os << "fault at t=" << sc.fault_times[f] << ": S delay ";
        if (rr.delays.S[f]) os << *rr.delays.S[f] << " s";
        else os << "none";
        os << ", D delay ";
        if (rr.delays.D[f]) os << *rr.delays.D[f] << " s";
        else os << "none";
        os << "\n";
    }
    return os.str();
}

} // namespace aso
