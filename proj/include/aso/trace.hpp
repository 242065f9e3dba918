#pragma once

#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>

#include "aso/simulation.hpp"
#include "aso/types.hpp"

namespace aso {

// ============================================================================
// CSV trace
//
// One row per accepted sample. Column order is fixed and documented:
//   t, x_i, y_i, y_v_i, zeta_m_i, zeta_M_i, xi_m_i, xi_M_i,
//   theta_hat_m_j, theta_hat_M_j, theta_bar_inf_m_j, theta_bar_inf_M_j,
//   pe_ok_m, pe_ok_M, branch, s_i, d_j, z_i, S, D, Z
// Values are written in scientific notation with 17 significant digits so a
// rerun with the same config and seed is byte-identical and downstream tools
// can re-verify invariants exactly.
// ============================================================================

inline std::string csv_header(Index n, Index p, Index q) {
    std::ostringstream os;
    os << "t";
    const auto cols = [&os](const char* base, Index count) {
        for (Index i = 1; i <= count; ++i) os << "," << base << "_" << i;
    };
    cols("x", n);
    cols("y", p);
    cols("y_v", p);
    cols("zeta_m", n);
    cols("zeta_M", n);
    cols("xi_m", n);
    cols("xi_M", n);
    cols("theta_hat_m", q);
    cols("theta_hat_M", q);
    cols("theta_bar_inf_m", q);
    cols("theta_bar_inf_M", q);
    os << ",pe_ok_m,pe_ok_M,branch";
    cols("s", p);
    cols("d", q);
    cols("z", p);
    os << ",S,D,Z";
    return os.str();
}

class CsvTraceWriter {
public:
    CsvTraceWriter(std::ostream& out, Index n, Index p, Index q)
        : out_(out), n_(n), p_(p), q_(q) {
        out_ << csv_header(n, p, q) << "\n";
    }

    void write_row(const Frame& f) {
        buf_.clear();
        num(f.t);
        vec(f.x);
        vec(f.y);
        vec(f.y_v);
        vec(f.obs.zeta_m);
        vec(f.obs.zeta_M);
        vec(f.obs.xi_m);
        vec(f.obs.xi_M);
        vec(f.obs.theta_hat_m);
        vec(f.obs.theta_hat_M);
        opt_vec(f.report.theta_bar_m, q_);
        opt_vec(f.report.theta_bar_M, q_);
        flag(f.report.pe_ok_m);
        flag(f.report.pe_ok_M);
        buf_ += ',';
        buf_ += f.report.branch_token();
        bits(f.ind.s);
        bits(f.ind.d);
        bits(f.ind.z);
        flag(f.ind.S);
        flag(f.ind.D);
        flag(f.ind.Z);
        buf_ += '\n';
        out_ << buf_;
    }

private:
    void num(double v) {
        char tmp[40];
        std::snprintf(tmp, sizeof(tmp), "%.16e", v);
        buf_ += tmp;
    }
    void vec(const Vector& v) {
        for (Index i = 0; i < v.size(); ++i) {
            buf_ += ',';
            num(v[i]);
        }
    }
    void opt_vec(const std::optional<Vector>& v, Index count) {
        if (v) {
            vec(*v);
        } else {
            for (Index i = 0; i < count; ++i) buf_ += ",nan";
        }
    }
    void flag(bool b) { buf_ += b ? ",1" : ",0"; }
    void bits(const std::vector<bool>& v) {
        for (bool b : v) buf_ += b ? ",1" : ",0";
    }

    std::ostream& out_;
    Index n_, p_, q_;
    std::string buf_;
};

} // namespace aso
