#include "quenchlab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "quenchlab/errors.hpp"
#include "quenchlab/expression.hpp"

namespace quenchlab {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void key_error(const std::string& key, const std::string& what) {
    throw ConfigError(key + ": " + what);
}

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& s) {
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (first != last && *first == '+') ++first;
    const auto [end, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || end != last || !std::isfinite(v)) {
        key_error(key, "expected a finite number, got '" + s + "'");
    }
    return v;
}

std::size_t parse_count(const std::string& key, const std::string& s) {
    std::size_t v = 0;
    const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        key_error(key, "expected a nonnegative integer, got '" + s + "'");
    }
    return v;
}

bool parse_bool(const std::string& key, const std::string& s) {
    if (s == "true") return true;
    if (s == "false") return false;
    key_error(key, "expected true or false, got '" + s + "'");
}

std::string quote(const std::string& s) { return "\"" + s + "\""; }

struct Field {
    std::string key;
    std::function<void(RunConfig&, const std::string&)> set;
    std::function<std::string(const RunConfig&)> get;
    bool required = false;
};

template <class Acc>
Field number(const std::string& key, Acc acc, bool required = false) {
    return {key,
            [key, acc](RunConfig& c, const std::string& s) { acc(c) = parse_double(key, s); },
            [acc](const RunConfig& c) {
                RunConfig copy = c;
                return format_double(acc(copy));
            },
            required};
}

template <class Acc>
Field count(const std::string& key, Acc acc) {
    return {key, [key, acc](RunConfig& c, const std::string& s) { acc(c) = parse_count(key, s); },
            [acc](const RunConfig& c) {
                RunConfig copy = c;
                return std::to_string(acc(copy));
            }};
}

template <class Acc>
Field flag(const std::string& key, Acc acc) {
    return {key, [key, acc](RunConfig& c, const std::string& s) { acc(c) = parse_bool(key, s); },
            [acc](const RunConfig& c) {
                RunConfig copy = c;
                return std::string(acc(copy) ? "true" : "false");
            }};
}

template <class Acc>
Field text(const std::string& key, Acc acc) {
    return {key, [acc](RunConfig& c, const std::string& s) { acc(c) = s; },
            [acc](const RunConfig& c) {
                RunConfig copy = c;
                return quote(acc(copy));
            }};
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = {
        number("domain.a", [](RunConfig& c) -> double& { return c.a; }),
        number("domain.b", [](RunConfig& c) -> double& { return c.b; }),
        count("grid.n", [](RunConfig& c) -> std::size_t& { return c.n_half; }),
        text("kernel.spec", [](RunConfig& c) -> std::string& { return c.kernel; }),
        number("params.lambda", [](RunConfig& c) -> double& { return c.params.lambda; }, true),
        number("params.mu", [](RunConfig& c) -> double& { return c.params.mu; }, true),
        number("params.p", [](RunConfig& c) -> double& { return c.params.p; }, true),
        number("params.q", [](RunConfig& c) -> double& { return c.params.q; }, true),
        text("initial.u", [](RunConfig& c) -> std::string& { return c.initial_u; }),
        text("initial.v", [](RunConfig& c) -> std::string& { return c.initial_v; }),
        number("solver.rtol", [](RunConfig& c) -> double& { return c.solver.rtol; }),
        number("solver.atol", [](RunConfig& c) -> double& { return c.solver.atol; }),
        number("solver.dt_init", [](RunConfig& c) -> double& { return c.solver.dt_init; }),
        number("solver.dt_min", [](RunConfig& c) -> double& { return c.solver.dt_min; }),
        number("solver.dt_max", [](RunConfig& c) -> double& { return c.solver.dt_max; }),
        number("solver.quench_threshold", [](RunConfig& c) -> double& { return c.solver.quench_threshold; }),
        number("solver.steady_tol", [](RunConfig& c) -> double& { return c.solver.steady_tol; }),
        number("solver.t_max", [](RunConfig& c) -> double& { return c.solver.t_max; }),
        count("solver.record_stride", [](RunConfig& c) -> std::size_t& { return c.solver.record_stride; }),
        number("solver.drain_ratio", [](RunConfig& c) -> double& { return c.solver.drain_ratio; }),
        count("solver.snapshot_every", [](RunConfig& c) -> std::size_t& { return c.solver.snapshot_every; }),
        count("solver.max_steps", [](RunConfig& c) -> std::size_t& { return c.solver.max_steps; }),
        text("output.dir", [](RunConfig& c) -> std::string& { return c.output_dir; }),
        number("analysis.window_lo", [](RunConfig& c) -> double& { return c.window.m_lo; }),
        number("analysis.window_hi", [](RunConfig& c) -> double& { return c.window.m_hi; }),
        number("analysis.cluster_radius", [](RunConfig& c) -> double& { return c.cluster_radius; }),
        number("region.lambda_lo", [](RunConfig& c) -> double& { return c.region.lambda_lo; }),
        number("region.lambda_hi", [](RunConfig& c) -> double& { return c.region.lambda_hi; }),
        number("region.mu_lo", [](RunConfig& c) -> double& { return c.region.mu_lo; }),
        number("region.mu_hi", [](RunConfig& c) -> double& { return c.region.mu_hi; }),
        count("region.resolution", [](RunConfig& c) -> std::size_t& { return c.region.resolution; }),
        count("region.bisect_steps", [](RunConfig& c) -> std::size_t& { return c.region.bisect_steps; }),
        flag("region.certificate", [](RunConfig& c) -> bool& { return c.region.certificate; }),
        number("region.escalation", [](RunConfig& c) -> double& { return c.region.escalation; }),
        count("shooting.delta_samples", [](RunConfig& c) -> std::size_t& { return c.shooting.delta_samples; }),
        count("shooting.bisect_steps", [](RunConfig& c) -> std::size_t& { return c.shooting.bisect_steps; }),
        number("shooting.quench_threshold", [](RunConfig& c) -> double& { return c.shooting.quench_threshold; }),
        number("stationary.newton_tol", [](RunConfig& c) -> double& { return c.stationary.newton_tol; }),
        count("stationary.max_iterations", [](RunConfig& c) -> std::size_t& { return c.stationary.max_iterations; }),
        text("rates.trajectory", [](RunConfig& c) -> std::string& { return c.rates_trajectory; }),
    };
    return table;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string resolve(const std::string& path, const fs::path& base) {
    fs::path p(path);
    if (p.is_relative()) p = base / p;
    return p.lexically_normal().string();
}

constexpr const char* kFilePrefix = "file:";

bool is_file_spec(const std::string& s) { return s.rfind(kFilePrefix, 0) == 0; }

void check_initial(const std::string& key, const std::string& spec) {
    if (is_file_spec(spec)) {
        const std::string path = spec.substr(5);
        if (!fs::exists(path)) key_error(key, "file '" + path + "' does not exist");
        return;
    }
    try {
        Expression::parse(spec);
    } catch (const ConfigError& e) {
        key_error(key, e.what());
    }
}

} // namespace

void validate_config(const RunConfig& c) {
    if (!(c.a < c.b)) key_error("domain.b", "must exceed domain.a");
    if (c.n_half == 0) key_error("grid.n", "must be at least 1");
    if (c.kernel != "epanechnikov" && c.kernel != "uniform" && !fs::exists(c.kernel)) {
        key_error("kernel.spec", "neither a built-in kernel nor an existing file: '" + c.kernel + "'");
    }
    if (!(c.params.lambda >= 0.0)) key_error("params.lambda", "must be nonnegative");
    if (!(c.params.mu >= 0.0)) key_error("params.mu", "must be nonnegative");
    if (!(c.params.p > 0.0)) key_error("params.p", "must be positive");
    if (!(c.params.q > 0.0)) key_error("params.q", "must be positive");
    check_initial("initial.u", c.initial_u);
    check_initial("initial.v", c.initial_v);

    const SolverConfig& s = c.solver;
    if (!(s.rtol > 0.0)) key_error("solver.rtol", "must be positive");
    if (!(s.atol >= 0.0)) key_error("solver.atol", "must be nonnegative");
    if (!(s.dt_init > 0.0)) key_error("solver.dt_init", "must be positive");
    if (!(s.dt_min > 0.0)) key_error("solver.dt_min", "must be positive");
    if (!(s.dt_max > s.dt_min)) key_error("solver.dt_max", "must exceed solver.dt_min");
    if (!(s.quench_threshold > 0.0)) key_error("solver.quench_threshold", "must be positive");
    if (!(s.steady_tol > 0.0)) key_error("solver.steady_tol", "must be positive");
    if (!(s.t_max > 0.0)) key_error("solver.t_max", "must be positive");
    if (s.record_stride == 0) key_error("solver.record_stride", "must be at least 1");
    if (!(s.drain_ratio > 0.0) || s.drain_ratio > 1.0) key_error("solver.drain_ratio", "must lie in (0, 1]");
    if (s.max_steps == 0) key_error("solver.max_steps", "must be at least 1");

    if (c.output_dir.empty()) key_error("output.dir", "must not be empty");
    if (!(c.window.m_lo > 0.0)) key_error("analysis.window_lo", "must be positive");
    if (!(c.window.m_hi > c.window.m_lo)) key_error("analysis.window_hi", "must exceed analysis.window_lo");
    if (!(c.cluster_radius >= 0.0)) key_error("analysis.cluster_radius", "must be nonnegative");

    const RegionSettings& r = c.region;
    if (!(r.lambda_lo >= 0.0)) key_error("region.lambda_lo", "must be nonnegative");
    if (!(r.lambda_hi > r.lambda_lo)) key_error("region.lambda_hi", "must exceed region.lambda_lo");
    if (!(r.mu_lo >= 0.0)) key_error("region.mu_lo", "must be nonnegative");
    if (!(r.mu_hi > r.mu_lo)) key_error("region.mu_hi", "must exceed region.mu_lo");
    if (r.resolution == 0) key_error("region.resolution", "must be at least 1");
    if (!(r.escalation >= 1.0)) key_error("region.escalation", "must be at least 1");

    if (c.shooting.delta_samples < 2) key_error("shooting.delta_samples", "must be at least 2");
    if (!(c.shooting.quench_threshold > 0.0)) key_error("shooting.quench_threshold", "must be positive");
    if (!(c.stationary.newton_tol > 0.0)) key_error("stationary.newton_tol", "must be positive");
    if (c.stationary.max_iterations == 0) key_error("stationary.max_iterations", "must be at least 1");
    if (!c.rates_trajectory.empty() && !fs::exists(c.rates_trajectory)) {
        key_error("rates.trajectory", "file '" + c.rates_trajectory + "' does not exist");
    }
}

RunConfig parse_config_text(const std::string& text, const fs::path& base_dir) {
    std::map<std::string, const Field*> by_key;
    for (const Field& f : fields()) by_key.emplace(f.key, &f);

    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string where = "line " + std::to_string(lineno);
        std::string body = line;
        bool in_quote = false;
        for (std::size_t i = 0; i < body.size(); ++i) {
            if (body[i] == '"') in_quote = !in_quote;
            if (body[i] == '#' && !in_quote) {
                body.resize(i);
                break;
            }
        }
        body = trim(body);
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'section.key = value', got '" + body + "'");
        }
        const std::string key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        const auto it = by_key.find(key);
        if (it == by_key.end()) {
            throw ConfigError(key + ": unknown key (" + where + ")");
        }
        if (!seen.insert(key).second) {
            throw ConfigError(key + ": duplicate key (" + where + ")");
        }
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"') {
            value = value.substr(1, value.size() - 2);
        } else if (value.empty()) {
            throw ConfigError(key + ": empty value (" + where + ")");
        }
        it->second->set(cfg, value);
    }
    for (const Field& f : fields()) {
        if (f.required && !seen.count(f.key)) {
            throw ConfigError(f.key + ": missing required key");
        }
    }

    if (cfg.kernel != "epanechnikov" && cfg.kernel != "uniform") cfg.kernel = resolve(cfg.kernel, base_dir);
    for (std::string* spec : {&cfg.initial_u, &cfg.initial_v}) {
        if (is_file_spec(*spec)) *spec = kFilePrefix + resolve(spec->substr(5), base_dir);
    }
    if (!cfg.rates_trajectory.empty()) cfg.rates_trajectory = resolve(cfg.rates_trajectory, base_dir);

    validate_config(cfg);
    return cfg;
}

RunConfig parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot read '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), fs::absolute(path).parent_path());
}

std::string emit_config(const RunConfig& config) {
    std::string out;
    std::string section;
    for (const Field& f : fields()) {
        const std::string s = f.key.substr(0, f.key.find('.'));
        if (!section.empty() && s != section) out += "\n";
        section = s;
        out += f.key + " = " + f.get(config) + "\n";
    }
    return out;
}

} // namespace quenchlab
