#include "quenchlab/artifacts.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <Eigen/Core>
#include <openssl/evp.h>
#include <openssl/opensslv.h>

#include "quenchlab/errors.hpp"

#ifndef QUENCHLAB_VERSION
#define QUENCHLAB_VERSION "0.0.0"
#endif

namespace quenchlab {

namespace {

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << std::setprecision(17);
    return out;
}

std::string num(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    return out;
}

double cell_double(const std::string& s, const fs::path& path, std::size_t row) {
    double v = 0.0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ConfigError(path.string() + ": bad number '" + s + "' in row " + std::to_string(row));
    }
    return v;
}

} // namespace

void write_trajectory_csv(const fs::path& path, const Trajectory& trajectory, const Grid& grid) {
    auto out = open_out(path);
    out << "t,min_u,x_argmin_u,min_v,x_argmin_v,dt,psi_gap\n";
    for (const Sample& s : trajectory.samples) {
        out << num(s.t) << ',' << num(s.min_u) << ',' << num(grid[s.argmin_u]) << ','
            << num(s.min_v) << ',' << num(grid[s.argmin_v]) << ',' << num(s.elapsed) << ','
            << num(s.psi_gap) << '\n';
    }
}

void write_snapshots_csv(const fs::path& path, const Trajectory& trajectory, const Grid& grid) {
    auto out = open_out(path);
    out << "t,x,u,v\n";
    for (const State& st : trajectory.snapshots) {
        for (Eigen::Index i = 0; i < st.u.size(); ++i) {
            out << num(st.t) << ',' << num(grid[static_cast<std::size_t>(i)]) << ',' << num(st.u(i))
                << ',' << num(st.v(i)) << '\n';
        }
    }
}

void write_rates_csv(const fs::path& path, const Trajectory& trajectory, double correction) {
    auto out = open_out(path);
    out << "log_T_minus_t,log_min_u,log_min_v\n";
    const std::vector<double> ttg = trajectory.time_to_go(correction);
    for (std::size_t k = 0; k < trajectory.samples.size(); ++k) {
        if (!(ttg[k] > 0.0)) continue;
        const Sample& s = trajectory.samples[k];
        out << num(std::log(ttg[k])) << ',' << num(std::log(s.min_u)) << ',' << num(std::log(s.min_v))
            << '\n';
    }
}

void write_region_csv(const fs::path& path, const RegionMap& map) {
    auto out = open_out(path);
    out << "lambda,mu,class,T_est\n";
    for (const RegionCell& c : map.cells) {
        out << num(c.lambda) << ',' << num(c.mu) << ',' << to_string(c.cls) << ','
            << (c.T_est ? num(*c.T_est) : std::string()) << '\n';
    }
}

void write_boundary_csv(const fs::path& path, const RegionMap& map) {
    auto out = open_out(path);
    out << "lambda,mu_star_lo,mu_star_hi\n";
    for (const BoundaryEstimate& b : map.boundary) {
        out << num(b.lambda) << ',' << num(b.mu_star_lo) << ',' << num(b.mu_star_hi) << '\n';
    }
}

void write_shooting_csv(const fs::path& path, const std::vector<ShootingRecord>& records) {
    auto out = open_out(path);
    out << "delta,regime,T_delta,floor_u,floor_v\n";
    for (const ShootingRecord& r : records) {
        out << num(r.delta) << ',' << to_string(r.regime) << ',' << num(r.T_delta) << ','
            << num(r.floor_u) << ',' << num(r.floor_v) << '\n';
    }
}

void write_stationary_csv(const fs::path& path, const Grid& grid, const StationaryPair& pair) {
    auto out = open_out(path);
    out << "x,w,z\n";
    for (Eigen::Index i = 0; i < pair.w.size(); ++i) {
        out << num(grid[static_cast<std::size_t>(i)]) << ',' << num(pair.w(i)) << ',' << num(pair.z(i))
            << '\n';
    }
}

Trajectory read_trajectory_csv(const fs::path& path, const Grid& grid) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read trajectory '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line) || line != "t,min_u,x_argmin_u,min_v,x_argmin_v,dt,psi_gap") {
        throw ConfigError(path.string() + ": unexpected header");
    }
    Trajectory traj;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto cells = split(line);
        if (cells.size() != 7) {
            throw ConfigError(path.string() + ": expected 7 columns in row " + std::to_string(row));
        }
        Sample s;
        s.t = cell_double(cells[0], path, row);
        s.min_u = cell_double(cells[1], path, row);
        s.argmin_u = grid.nearest(cell_double(cells[2], path, row));
        s.min_v = cell_double(cells[3], path, row);
        s.argmin_v = grid.nearest(cell_double(cells[4], path, row));
        s.elapsed = cell_double(cells[5], path, row);
        s.psi_gap = cell_double(cells[6], path, row);
        traj.samples.push_back(s);
    }
    if (traj.samples.empty()) throw ConfigError(path.string() + ": no samples");
    return traj;
}

nlohmann::json to_json(const RateFit& fit) {
    return {{"slope", fit.slope},
            {"intercept", fit.intercept},
            {"residual_norm", fit.residual_norm},
            {"count", fit.count}};
}

nlohmann::json to_json(const Outcome& outcome) {
    nlohmann::json j;
    if (const auto* q = std::get_if<Quenched>(&outcome)) {
        j = {{"kind", "Quenched"},
             {"T_est", q->T_est},
             {"u_quenched", q->u_quenched},
             {"v_quenched", q->v_quenched},
             {"correction", q->correction}};
    } else if (const auto* s = std::get_if<Steady>(&outcome)) {
        j = {{"kind", "Steady"}, {"residual", s->residual}};
    } else if (const auto* i = std::get_if<Interrupted>(&outcome)) {
        j = {{"kind", "Interrupted"}, {"t", i->t}};
    } else {
        j = {{"kind", "TimedOut"}};
    }
    return j;
}

namespace {

nlohmann::json law_json(const RateLaw& law) {
    return {{"bounded", law.bounded}, {"power", law.power}, {"log_power", law.log_power}};
}

template <class T, class F>
nlohmann::json opt(const std::optional<T>& v, F f) {
    return v ? f(*v) : nlohmann::json(nullptr);
}

} // namespace

nlohmann::json report_to_json(const QuenchReport& r) {
    auto id = [](double x) { return nlohmann::json(x); };
    auto fit = [](const RateFit& f) { return to_json(f); };
    auto pair = [](const std::pair<double, double>& p) { return nlohmann::json::array({p.first, p.second}); };
    nlohmann::json j;
    j["outcome"] = to_json(r.outcome);
    j["regime_predicted"] = to_string(r.regime_predicted);
    j["regime_observed"] = to_string(r.regime_observed);
    j["T_est"] = r.T_est;
    j["T_correction"] = r.T_correction;
    j["fit_u"] = opt(r.fit_u, fit);
    j["fit_v"] = opt(r.fit_v, fit);
    j["alpha_u"] = opt(r.alpha_u, id);
    j["alpha_v"] = opt(r.alpha_v, id);
    j["alpha_u_sensitivity"] = opt(r.alpha_u_sensitivity, pair);
    j["alpha_v_sensitivity"] = opt(r.alpha_v_sensitivity, pair);
    j["log_correction_u"] = r.log_correction_u;
    j["log_correction_v"] = r.log_correction_v;
    j["log_fit_u"] = opt(r.log_fit_u, fit);
    j["log_fit_v"] = opt(r.log_fit_v, fit);
    j["law_u"] = law_json(r.law_u);
    j["law_v"] = law_json(r.law_v);
    j["quench_set"] = r.quench_set;
    j["psi_gap_initial"] = r.psi_gap_initial;
    j["psi_gap_max"] = r.psi_gap_max;
    j["psi_gap_bound"] = r.psi_gap_bound;
    j["floor_u"] = r.floor_u;
    j["floor_v"] = r.floor_v;
    j["relation"] = opt(r.relation, [](const ComponentRelation& c) {
        return nlohmann::json{{"spread", c.spread}, {"bounded", c.bounded}, {"count", c.ratio.size()},
                              {"first", c.ratio.front()}, {"last", c.ratio.back()}};
    });
    j["argmin_coincide"] = r.argmin_coincide;
    return j;
}

void write_json(const fs::path& path, const nlohmann::json& doc) {
    auto out = open_out(path);
    out << doc.dump(2) << '\n';
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path.string() + "'");
    return nlohmann::json::parse(in);
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned int i = 0; i < len; ++i) {
        hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    }
    return hex.str();
}

nlohmann::json build_manifest(const ManifestInfo& info) {
    nlohmann::json j;
    j["subcommand"] = info.subcommand;
    j["config"] = info.config_text;
    j["seed"] = info.seed ? nlohmann::json(*info.seed) : nlohmann::json(nullptr);
    j["wall_seconds"] = info.wall_seconds;
    j["versions"] = {
        {"quenchlab", QUENCHLAB_VERSION},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
        {"openssl", OPENSSL_VERSION_TEXT},
        {"compiler", __VERSION__},
    };
    nlohmann::json files = nlohmann::json::array();
    for (const fs::path& f : info.files) {
        files.push_back({{"name", f.filename().string()},
                         {"bytes", fs::file_size(f)},
                         {"sha256", sha256_file(f)}});
    }
    j["files"] = files;
    return j;
}

} // namespace quenchlab
