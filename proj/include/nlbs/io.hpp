#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "nlbs/detail/numerics.hpp"
#include "nlbs/errors.hpp"

// RunSpec plumbing and surface emission. Every CSV/JSON artifact embeds the
// full RunSpec so a run can be reproduced from its output alone; files are
// written atomically (temp then rename).

namespace nlbs {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    int n = 0;

    static Range parse(const std::string& s) {
        Range r;
        char rest;
        if (std::sscanf(s.c_str(), "%lf:%lf:%d%c", &r.lo, &r.hi, &r.n, &rest) != 3)
            throw InvalidParameter("range must be lo:hi:n, got '" + s + "'");
        r.validate();
        return r;
    }
    void validate() const {
        if (!(n >= 1)) throw InvalidParameter("range needs n >= 1 points");
        if (!(detail::finite(lo) && detail::finite(hi)) || (n > 1 && !(hi > lo)))
            throw InvalidParameter("range needs finite lo < hi");
    }
    double at(int i) const { return n == 1 ? lo : lo + (hi - lo) * double(i) / (n - 1); }
    std::string str() const {
        return detail::fmt(lo) + ":" + detail::fmt(hi) + ":" + std::to_string(n);
    }
};

/// Payload of one CLI invocation. Unused fields keep their defaults and are
/// omitted from the echo where empty.
struct RunSpec {
    std::string command;
    std::string family;
    std::string model = "frey";
    double sigma = 0.4;
    double rho = 1.0;
    double omega = 1.0;
    double c = 0.5;
    double d = 0.0;
    double d2 = 0.0;
    std::string s_range = "0.1:5:50";
    std::string t_range = "0:0.5:6";
    std::string format = "csv";
    std::string out;
    // solver / convergence
    std::string payoff = "family";
    std::string boundary = "reference";
    std::string scheme = "trapezoid";
    std::string x_range;
    int nx = 201;
    int nt = 25;
    double T = 0.5;
    std::string levels = "201:25,401:50,801:100";
    double newton_tol = 1e-9;
    int newton_max = 50;
    double guard = 1e-8;
    int startup_steps = 2;
    double fd_rel_step = 1e-5;
    std::string c_list;  // sweep

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["command"] = command;
        if (!family.empty()) j["family"] = family;
        j["model"] = model;
        j["sigma"] = sigma;
        j["rho"] = rho;
        j["omega"] = omega;
        j["c"] = c;
        j["d"] = d;
        j["d2"] = d2;
        if (command == "eval" || command == "greeks" || command == "sweep") {
            j["s_range"] = s_range;
            j["t_range"] = t_range;
        }
        if (command == "greeks") j["fd_rel_step"] = fd_rel_step;
        if (command == "solve" || command == "converge") {
            j["payoff"] = payoff;
            j["boundary"] = boundary;
            j["scheme"] = scheme;
            j["x_range"] = x_range;
            j["T"] = T;
            j["newton_tol"] = newton_tol;
            j["newton_max"] = newton_max;
            j["guard"] = guard;
            j["startup_steps"] = startup_steps;
            if (command == "solve") {
                j["nx"] = nx;
                j["nt"] = nt;
            } else {
                j["levels"] = levels;
            }
        }
        if (command == "sweep") j["c_list"] = c_list;
        j["format"] = format;
        return j;
    }

    void load_json(const nlohmann::json& j) {
        const auto get = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        get("family", family);
        get("model", model);
        get("sigma", sigma);
        get("rho", rho);
        get("omega", omega);
        get("c", c);
        get("d", d);
        get("d2", d2);
        get("s_range", s_range);
        get("t_range", t_range);
        get("format", format);
        get("out", out);
        get("payoff", payoff);
        get("boundary", boundary);
        get("scheme", scheme);
        get("x_range", x_range);
        get("nx", nx);
        get("nt", nt);
        get("T", T);
        get("levels", levels);
        get("newton_tol", newton_tol);
        get("newton_max", newton_max);
        get("guard", guard);
        get("startup_steps", startup_steps);
        get("fd_rel_step", fd_rel_step);
        get("c_list", c_list);
    }
};

/// One output row; empty optionals are emitted as empty CSV cells / JSON null.
struct SurfaceRow {
    double S = 0.0;
    double t = 0.0;
    double z = 0.0;
    std::optional<double> u;
    std::optional<double> delta;
    std::optional<double> delta_fd;
    bool in_domain = true;
};

inline std::string render_surface_csv(const RunSpec& spec, const std::vector<SurfaceRow>& rows,
                                      bool with_fd = false) {
    std::ostringstream os;
    os << "# nlbs " << spec.command << " surface\n";
    os << "# runspec: " << spec.to_json().dump() << "\n";
    os << (with_fd ? "S,t,z,u,delta,delta_fd,in_domain" : "S,t,z,u,delta,in_domain") << "\n";
    const auto cell = [](const std::optional<double>& v) {
        return v ? detail::fmt(*v) : std::string();
    };
    for (const auto& r : rows) {
        os << detail::fmt(r.S) << ',' << detail::fmt(r.t) << ',' << detail::fmt(r.z) << ','
           << cell(r.u) << ',' << cell(r.delta) << ',';
        if (with_fd) os << cell(r.delta_fd) << ',';
        os << (r.in_domain ? "true" : "false") << "\n";
    }
    return os.str();
}

inline std::string render_surface_json(const RunSpec& spec, const std::vector<SurfaceRow>& rows,
                                       bool with_fd = false) {
    nlohmann::json j;
    j["runspec"] = spec.to_json();
    auto cols = nlohmann::json::array({"S", "t", "z", "u", "delta"});
    if (with_fd) cols.push_back("delta_fd");
    cols.push_back("in_domain");
    j["columns"] = cols;
    auto& out = j["rows"] = nlohmann::json::array();
    const auto cell = [](const std::optional<double>& v) {
        return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    for (const auto& r : rows) {
        auto row = nlohmann::json::array({r.S, r.t, r.z, cell(r.u), cell(r.delta)});
        if (with_fd) row.push_back(cell(r.delta_fd));
        row.push_back(r.in_domain);
        out.push_back(std::move(row));
    }
    return j.dump(1) + "\n";
}

/// Write via a temporary in the same directory, then rename into place.
inline void atomic_write_file(const std::string& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot open '" + tmp.string() + "' for writing");
        os << content;
        os.flush();
        if (!os) throw Error("write failed for '" + tmp.string() + "'");
    }
    fs::rename(tmp, target);
}

inline void emit(const std::string& out_path, const std::string& content, std::ostream& stdout_os) {
    if (out_path.empty() || out_path == "-")
        stdout_os << content;
    else
        atomic_write_file(out_path, content);
}

}  // namespace nlbs
