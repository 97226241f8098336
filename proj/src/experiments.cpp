#include "quenchlab/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "quenchlab/artifacts.hpp"
#include "quenchlab/errors.hpp"
#include "quenchlab/expression.hpp"

namespace quenchlab {

namespace {

struct Setup {
    Grid grid;
    NonlocalOperator op;
    Eigen::VectorXd u0;
    Eigen::VectorXd v0;
};

Setup make_setup(const RunConfig& c) {
    Grid grid = build_grid(c.a, c.b, c.n_half);
    NonlocalOperator op = build_operator(grid, Kernel::from_spec(c.kernel));
    Eigen::VectorXd u0 = evaluate_initial(c.initial_u, grid, "initial.u");
    Eigen::VectorXd v0 = evaluate_initial(c.initial_v, grid, "initial.v");
    return {std::move(grid), std::move(op), std::move(u0), std::move(v0)};
}

void require_coupling(const SystemParams& p) {
    if (!(p.lambda > 0.0)) throw ConfigError("params.lambda: must be positive for time evolution");
    if (!(p.mu > 0.0)) throw ConfigError("params.mu: must be positive for time evolution");
}

nlohmann::json grid_json(const Grid& g) {
    return {{"a", g.a()}, {"b", g.b()}, {"n_half", g.n_half()}, {"nodes", g.size()}, {"h", g.h()}};
}

nlohmann::json params_json(const SystemParams& p) {
    return {{"lambda", p.lambda}, {"mu", p.mu}, {"p", p.p}, {"q", p.q}};
}

nlohmann::json stats_json(const IntegrationStats& s) {
    return {{"accepted", s.accepted},
            {"rejected", s.rejected},
            {"positivity_rejections", s.positivity_rejections},
            {"event_bisections", s.event_bisections}};
}

RunSummary simulate(const RunConfig& c, const fs::path& out, std::ostream& log) {
    require_coupling(c.params);
    const Setup s = make_setup(c);
    const IntegrationResult result = integrate(State{0.0, s.u0, s.v0}, s.op, c.params, c.solver);
    AnalysisOptions ao;
    ao.window = c.window;
    ao.cluster_radius = c.cluster_radius;
    const QuenchReport rep = analyze(result, s.grid, c.params, c.solver, ao);

    RunSummary sum;
    write_trajectory_csv(out / "trajectory.csv", result.trajectory, s.grid);
    write_snapshots_csv(out / "snapshots.csv", result.trajectory, s.grid);
    sum.files = {out / "trajectory.csv", out / "snapshots.csv"};
    if (is_quenched(result.outcome)) {
        write_rates_csv(out / "rates.csv", result.trajectory, rep.T_correction);
        sum.files.push_back(out / "rates.csv");
    }
    nlohmann::json doc = report_to_json(rep);
    doc["t_final"] = result.clock.value();
    doc["stats"] = stats_json(result.stats);
    doc["grid"] = grid_json(s.grid);
    doc["params"] = params_json(c.params);
    doc["quench_threshold"] = c.solver.quench_threshold;
    write_json(out / "report.json", doc);
    sum.files.push_back(out / "report.json");

    log << "simulate: " << doc["outcome"]["kind"].get<std::string>() << ", regime "
        << to_string(rep.regime_observed) << ", T_est " << rep.T_est;
    if (rep.alpha_u) log << ", alpha_u " << *rep.alpha_u;
    if (rep.alpha_v) log << ", alpha_v " << *rep.alpha_v;
    log << '\n';
    return sum;
}

RunSummary stationary(const RunConfig& c, const fs::path& out, std::ostream& log) {
    c.params.validate(true);
    const Setup s = make_setup(c);
    NewtonOptions no;
    no.tol = c.stationary.newton_tol;
    no.max_iterations = c.stationary.max_iterations;
    StationaryResult newton = solve_stationary_newton(s.op, c.params, s.u0, s.v0, no);

    RunSummary sum;
    nlohmann::json doc;
    doc["params"] = params_json(c.params);
    doc["grid"] = grid_json(s.grid);
    doc["bounds"] = {{"w_lower", c.params.mu > 0.0 ? std::pow(c.params.mu, 1.0 / c.params.q) : 0.0},
                     {"z_lower", c.params.lambda > 0.0 ? std::pow(c.params.lambda, 1.0 / c.params.p) : 0.0},
                     {"upper", 1.0}};

    if (c.params.lambda > 0.0 && c.params.mu > 0.0) {
        nlohmann::json ev;
        try {
            const PointClassification pc = classify_parameter_point(s.op, c.params, c.solver);
            ev["class"] = to_string(pc.cls);
            ev["t_end"] = pc.t_end;
            ev["T_est"] = pc.T_est ? nlohmann::json(*pc.T_est) : nlohmann::json(nullptr);
            if (pc.steady_u) {
                if (std::holds_alternative<NoStationary>(newton)) {
                    newton = solve_stationary_newton(s.op, c.params, *pc.steady_u, *pc.steady_v, no);
                    ev["newton_restarted_from_limit"] = true;
                }
                if (const auto* pair = std::get_if<StationaryPair>(&newton)) {
                    ev["agreement_inf"] = std::max((pair->w - *pc.steady_u).lpNorm<Eigen::Infinity>(),
                                                   (pair->z - *pc.steady_v).lpNorm<Eigen::Infinity>());
                }
            }
        } catch (const Unresolved& e) {
            ev["class"] = to_string(PointClass::Unresolved);
            ev["message"] = e.what();
            sum.exit_code = kExitUnresolved;
        }
        doc["evolution"] = ev;
    }

    if (const auto* pair = std::get_if<StationaryPair>(&newton)) {
        write_stationary_csv(out / "stationary.csv", s.grid, *pair);
        sum.files.push_back(out / "stationary.csv");
        doc["found"] = true;
        doc["residual"] = pair->residual;
        doc["iterations"] = pair->iterations;
        doc["margins"] = {{"w_lower", pair->lower_margin_w},
                          {"z_lower", pair->lower_margin_z},
                          {"upper", pair->upper_margin}};
        log << "stationary: pair found, residual " << pair->residual << '\n';
    } else {
        doc["found"] = false;
        doc["reason"] = std::get<NoStationary>(newton).reason;
        log << "stationary: no stationary pair (" << std::get<NoStationary>(newton).reason << ")\n";
    }
    write_json(out / "stationary.json", doc);
    sum.files.push_back(out / "stationary.json");
    return sum;
}

RunSummary region(const RunConfig& c, const fs::path& out, std::ostream& log) {
    if (!(c.params.p > 0.0) || !(c.params.q > 0.0)) throw ConfigError("params.p: must be positive");
    const Setup s = make_setup(c);
    RegionOptions ro;
    ro.resolution = c.region.resolution;
    ro.bisect_steps = c.region.bisect_steps;
    ro.classify.stop_on_certificate = c.region.certificate;
    ro.classify.escalation = c.region.escalation;
    const RegionMap map = map_region(s.op, c.params.p, c.params.q, {c.region.lambda_lo, c.region.lambda_hi},
                                     {c.region.mu_lo, c.region.mu_hi}, c.solver, ro);

    RunSummary sum;
    write_region_csv(out / "region.csv", map);
    write_boundary_csv(out / "boundary.csv", map);
    std::size_t unresolved = 0;
    std::size_t global_outside = 0;
    std::size_t global = 0;
    for (const RegionCell& cell : map.cells) {
        if (cell.cls == PointClass::Unresolved) ++unresolved;
        if (cell.cls == PointClass::Global) {
            ++global;
            if (!(cell.lambda < 1.0 && cell.mu < 1.0)) ++global_outside;
        }
    }
    std::size_t unresolved_columns = 0;
    for (const BoundaryEstimate& b : map.boundary) unresolved_columns += b.resolved ? 0 : 1;
    nlohmann::json doc = {{"p", c.params.p},
                          {"q", c.params.q},
                          {"resolution", c.region.resolution},
                          {"cells", map.cells.size()},
                          {"global_cells", global},
                          {"unresolved_cells", unresolved},
                          {"unresolved_columns", unresolved_columns},
                          {"staircase_violations", staircase_violations(map)},
                          {"global_outside_unit_square", global_outside}};
    write_json(out / "region.json", doc);
    sum.files = {out / "region.csv", out / "boundary.csv", out / "region.json"};
    if (unresolved > 0 || unresolved_columns > 0) sum.exit_code = kExitUnresolved;
    log << "region: " << global << " Global of " << map.cells.size() << " cells, " << unresolved
        << " unresolved, staircase violations " << doc["staircase_violations"] << '\n';
    return sum;
}

RunSummary rates(const RunConfig& c, const fs::path& out, std::ostream& log) {
    const Grid grid = build_grid(c.a, c.b, c.n_half);
    const fs::path input = c.rates_trajectory.empty() ? out / "trajectory.csv" : fs::path(c.rates_trajectory);
    if (!fs::exists(input)) {
        throw ConfigError("rates.trajectory: no trajectory at '" + input.string() +
                          "'; run simulate first or set rates.trajectory");
    }
    const Trajectory traj = read_trajectory_csv(input, grid);

    double correction = 0.0;
    std::string source;
    const fs::path report = input.parent_path() / "report.json";
    if (fs::exists(report)) {
        const nlohmann::json r = read_json(report);
        if (r.contains("T_correction") && r["T_correction"].is_number()) {
            correction = r["T_correction"].get<double>();
            source = "report";
        }
    }
    if (source.empty()) {
        // Linear extrapolation of the smaller minimum over the last increment.
        const std::size_t n = traj.samples.size();
        if (n < 2) throw NumericalFailure("rates: need at least two samples");
        const Sample& a = traj.samples[n - 2];
        const Sample& b = traj.samples[n - 1];
        const bool use_u = b.min_u <= b.min_v;
        const double m0 = use_u ? a.min_u : a.min_v;
        const double m1 = use_u ? b.min_u : b.min_v;
        const double slope = (m0 - m1) / b.elapsed;
        if (!(slope > 0.0)) throw NumericalFailure("rates: last minimum is not decreasing");
        correction = m1 / slope;
        source = "finite_difference";
    }

    RunSummary sum;
    write_rates_csv(out / "rates.csv", traj, correction);
    nlohmann::json doc = {{"trajectory", input.string()},
                          {"correction", correction},
                          {"correction_source", source},
                          {"window", {c.window.m_lo, c.window.m_hi}}};
    for (auto [comp, key] : {std::pair{Component::U, "u"}, std::pair{Component::V, "v"}}) {
        try {
            doc[std::string("fit_") + key] = to_json(fit_rate(traj, correction, comp, c.window));
        } catch (const InsufficientWindow& e) {
            doc[std::string("fit_") + key] = nullptr;
        }
    }
    write_json(out / "rates.json", doc);
    sum.files = {out / "rates.csv", out / "rates.json"};
    log << "rates: slope_u " << doc["fit_u"].value("slope", std::nan("")) << ", slope_v "
        << doc["fit_v"].value("slope", std::nan("")) << '\n';
    return sum;
}

RunSummary shoot(const RunConfig& c, const fs::path& out, std::ostream& log) {
    require_coupling(c.params);
    if (!(c.params.p < 1.0)) throw ConfigError("params.p: shooting requires p < 1");
    if (!(c.params.q < 1.0)) throw ConfigError("params.q: shooting requires q < 1");
    const Setup s = make_setup(c);
    ShootingConfig sc;
    sc.params = c.params;
    sc.u0_base = s.u0;
    sc.v0_base = s.v0;
    sc.delta_samples = c.shooting.delta_samples;
    sc.bisect_steps = c.shooting.bisect_steps;
    try {
        sc.validate();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("initial.u: ") + e.what());
    }
    SolverConfig solver = c.solver;
    solver.quench_threshold = c.shooting.quench_threshold;

    RunSummary sum;
    ShootingResult res;
    try {
        res = run_shooting(sc, s.op, solver);
    } catch (const SweepTooCoarse& e) {
        write_json(out / "shooting.json", {{"error", e.what()}});
        sum.files = {out / "shooting.json"};
        sum.exit_code = kExitUnresolved;
        log << "shoot: " << e.what() << '\n';
        return sum;
    }
    std::vector<ShootingRecord> all = res.sweep;
    all.insert(all.end(), res.probes.begin(), res.probes.end());
    std::sort(all.begin(), all.end(), [](const auto& x, const auto& y) { return x.delta < y.delta; });
    write_shooting_csv(out / "shooting.csv", all);

    std::size_t bound_violations = 0;
    bool all_quenched = true;
    for (const ShootingRecord& r : all) {
        if (r.T_delta > Tdelta_bound(sc, r.delta)) ++bound_violations;
        all_quenched = all_quenched && r.quenched;
    }
    nlohmann::json doc = {{"delta_minus", res.delta_minus},
                          {"delta_plus", res.delta_plus},
                          {"width", res.width()},
                          {"initial_width", res.initial_width},
                          {"width_ratio", res.width() / res.initial_width},
                          {"sweep_samples", res.sweep.size()},
                          {"probe_runs", res.probes.size()},
                          {"quench_threshold", solver.quench_threshold},
                          {"all_quenched", all_quenched},
                          {"Tdelta_bound_violations", bound_violations},
                          {"floor_u_decreases", floor_u_decreases(res.sweep)},
                          {"max_adjacent_jump", max_adjacent_jump(res.sweep)}};
    write_json(out / "shooting.json", doc);
    sum.files = {out / "shooting.csv", out / "shooting.json"};
    log << "shoot: bracket [" << res.delta_minus << ", " << res.delta_plus << "], width ratio "
        << doc["width_ratio"] << '\n';
    return sum;
}

std::vector<double> read_numbers_line(const std::string& line) {
    std::vector<double> out;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        tok.erase(std::remove(tok.begin(), tok.end(), ','), tok.end());
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

} // namespace

Eigen::VectorXd evaluate_initial(const std::string& spec, const Grid& grid, const std::string& key) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXd out(n);
    if (spec.rfind("file:", 0) == 0) {
        const std::string path = spec.substr(5);
        std::ifstream in(path);
        if (!in) throw ConfigError(key + ": cannot read '" + path + "'");
        std::vector<double> xs;
        std::vector<double> vals;
        std::string line;
        std::size_t columns = 0;
        while (std::getline(in, line)) {
            const auto hash = line.find('#');
            if (hash != std::string::npos) line.resize(hash);
            std::vector<double> row;
            try {
                row = read_numbers_line(line);
            } catch (const std::exception&) {
                throw ConfigError(key + ": non-numeric entry in '" + path + "'");
            }
            if (row.empty()) continue;
            if (columns == 0) columns = row.size();
            if (row.size() != columns || columns > 2) {
                throw ConfigError(key + ": '" + path + "' must have one or two columns throughout");
            }
            if (columns == 2) xs.push_back(row[0]);
            vals.push_back(row.back());
        }
        if (columns == 1) {
            if (vals.size() != grid.size()) {
                throw ConfigError(key + ": '" + path + "' has " + std::to_string(vals.size()) +
                                  " values for " + std::to_string(grid.size()) + " nodes");
            }
            for (Eigen::Index i = 0; i < n; ++i) out(i) = vals[static_cast<std::size_t>(i)];
        } else if (columns == 2) {
            for (std::size_t k = 1; k < xs.size(); ++k) {
                if (!(xs[k] > xs[k - 1])) throw ConfigError(key + ": abscissae must increase strictly");
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                const double x = grid[static_cast<std::size_t>(i)];
                if (x <= xs.front()) {
                    out(i) = vals.front();
                } else if (x >= xs.back()) {
                    out(i) = vals.back();
                } else {
                    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
                    const std::size_t k = static_cast<std::size_t>(it - xs.begin());
                    const double w = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                    out(i) = (1.0 - w) * vals[k - 1] + w * vals[k];
                }
            }
        } else {
            throw ConfigError(key + ": '" + path + "' is empty");
        }
    } else {
        Expression e;
        try {
            e = Expression::parse(spec);
        } catch (const ConfigError& err) {
            throw ConfigError(key + ": " + err.what());
        }
        for (Eigen::Index i = 0; i < n; ++i) out(i) = e(grid[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!std::isfinite(out(i)) || !(out(i) > 0.0)) {
            throw ConfigError(key + ": initial data must be finite and positive (node " +
                              std::to_string(i) + ")");
        }
    }
    return out;
}

const std::vector<std::string>& subcommands() {
    static const std::vector<std::string> names = {"simulate", "stationary", "region", "rates", "shoot"};
    return names;
}

RunSummary run_subcommand(const RunConfig& config, const std::string& subcommand, const RunOptions& options,
                          std::ostream& log) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path out = options.out_dir.empty() ? fs::path(config.output_dir) : options.out_dir;
    fs::create_directories(out);

    RunSummary sum;
    if (subcommand == "simulate") sum = simulate(config, out, log);
    else if (subcommand == "stationary") sum = stationary(config, out, log);
    else if (subcommand == "region") sum = region(config, out, log);
    else if (subcommand == "rates") sum = rates(config, out, log);
    else if (subcommand == "shoot") sum = shoot(config, out, log);
    else throw ConfigError("unknown subcommand '" + subcommand + "'");

    ManifestInfo info;
    info.subcommand = subcommand;
    info.config_text = emit_config(config);
    info.seed = options.seed;
    info.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    info.files = sum.files;
    const fs::path manifest = out / ("manifest_" + subcommand + ".json");
    nlohmann::json doc = build_manifest(info);
    doc["exit_code"] = sum.exit_code;
    write_json(manifest, doc);
    sum.files.push_back(manifest);
    return sum;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const ExteriorMassNegative*>(&e)) {
        return kExitConfig;
    }
    if (dynamic_cast<const Unresolved*>(&e) || dynamic_cast<const SweepTooCoarse*>(&e)) {
        return kExitUnresolved;
    }
    return kExitNumerical;
}

int run_experiment(const RunConfig& config, const std::string& subcommand, const RunOptions& options,
                   std::ostream& log, std::ostream& err) {
    try {
        return run_subcommand(config, subcommand, options, log).exit_code;
    } catch (const std::exception& e) {
        err << "quenchlab " << subcommand << ": " << e.what() << '\n';
        return exit_code_for(e);
    }
}

} // namespace quenchlab
