#include "quench/config.hpp"

#include "quench/errors.hpp"
#include "quench/expression.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace quench {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

const RunConfig::Entry* RunConfig::find(const std::string& key) const {
    auto it = entries.find(key);
    return it == entries.end() ? nullptr : &it->second;
}

std::string RunConfig::get_string(const std::string& key, const std::string& fallback) const {
    const Entry* e = find(key);
    return e ? e->value : fallback;
}

double RunConfig::get_double(const std::string& key, double fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        std::size_t used = 0;
        const double v = std::stod(e->value, &used);
        if (trim(e->value.substr(used)).empty()) return v;
    } catch (...) {
    }
    throw ConfigError("key '" + key + "': expected a number, got '" + e->value + "'", e->line);
}

int RunConfig::get_int(const std::string& key, int fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    try {
        std::size_t used = 0;
        const int v = std::stoi(e->value, &used);
        if (trim(e->value.substr(used)).empty()) return v;
    } catch (...) {
    }
    throw ConfigError("key '" + key + "': expected an integer, got '" + e->value + "'", e->line);
}

std::vector<double> RunConfig::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
    const Entry* e = find(key);
    if (!e) return fallback;
    std::vector<double> out;
    std::istringstream iss(e->value);
    std::string tok;
    while (iss >> tok) {
        try {
            out.push_back(std::stod(tok));
        } catch (...) {
            throw ConfigError("key '" + key + "': expected numbers, got '" + tok + "'", e->line);
        }
    }
    if (out.empty())
        throw ConfigError("key '" + key + "': empty value", e->line);
    return out;
}

int RunConfig::line_of(const std::string& key) const {
    const Entry* e = find(key);
    return e ? e->line : 0;
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    cfg.source_text = text;
    std::istringstream iss(text);
    std::string line;
    std::string section;
    int lineno = 0;
    while (std::getline(iss, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("malformed section header '" + line + "'", lineno);
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("empty section name", lineno);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("expected 'key = value', got '" + line + "'", lineno);
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("empty key", lineno);
        if (section.empty()) throw ConfigError("key '" + key + "' outside any section", lineno);
        cfg.entries[section + "." + key] = {value, lineno};
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

namespace {

// Evaluates an expression or loads a csv matrix ("csv:<path>") over the
// space-time boundary grid.
BoundaryField boundary_data(const RunConfig& cfg, const std::string& key,
                            const std::string& fallback_expr, const Grid& grid, int steps,
                            double dt) {
    const std::string spec = cfg.get_string(key, fallback_expr);
    BoundaryField out(steps + 1, grid.num_boundary());
    if (spec.rfind("csv:", 0) == 0) {
        const std::string path = spec.substr(4);
        std::ifstream in(path);
        if (!in)
            throw ConfigError("key '" + key + "': cannot open csv file '" + path + "'",
                              cfg.line_of(key));
        std::string line;
        for (int k = 0; k <= steps; ++k) {
            if (!std::getline(in, line))
                throw ConfigError("key '" + key + "': csv file too short", cfg.line_of(key));
            std::istringstream row(line);
            std::string cell;
            for (int j = 0; j < grid.num_boundary(); ++j) {
                if (!std::getline(row, cell, ','))
                    throw ConfigError("key '" + key + "': csv row too short", cfg.line_of(key));
                out(k, j) = std::stod(cell);
            }
        }
        return out;
    }
    Expression expr = Expression::parse(spec);
    for (int k = 0; k <= steps; ++k)
        for (int j = 0; j < grid.num_boundary(); ++j) {
            EvalContext ctx;
            const int node = grid.chain_nodes[j];
            ctx.x = grid.coords(node, 0);
            ctx.y = grid.dim == 2 ? grid.coords(node, 1) : 0.0;
            ctx.s = grid.chain_arclength(j);
            ctx.t = k * dt;
            out(k, j) = expr.eval(ctx);
        }
    return out;
}

Eigen::MatrixXd bulk_data(const RunConfig& cfg, const std::string& key,
                          const std::string& fallback_expr, const Grid& grid, int steps,
                          double dt) {
    const std::string spec = cfg.get_string(key, fallback_expr);
    Eigen::MatrixXd out(steps + 1, grid.num_nodes);
    if (spec.rfind("csv:", 0) == 0) {
        const std::string path = spec.substr(4);
        std::ifstream in(path);
        if (!in)
            throw ConfigError("key '" + key + "': cannot open csv file '" + path + "'",
                              cfg.line_of(key));
        std::string line;
        for (int k = 0; k <= steps; ++k) {
            if (!std::getline(in, line))
                throw ConfigError("key '" + key + "': csv file too short", cfg.line_of(key));
            std::istringstream row(line);
            std::string cell;
            for (int i = 0; i < grid.num_nodes; ++i) {
                if (!std::getline(row, cell, ','))
                    throw ConfigError("key '" + key + "': csv row too short", cfg.line_of(key));
                out(k, i) = std::stod(cell);
            }
        }
        return out;
    }
    Expression expr = Expression::parse(spec);
    for (int k = 0; k <= steps; ++k)
        for (int i = 0; i < grid.num_nodes; ++i) {
            EvalContext ctx;
            ctx.x = grid.coords(i, 0);
            ctx.y = grid.dim == 2 ? grid.coords(i, 1) : 0.0;
            ctx.t = k * dt;
            out(k, i) = expr.eval(ctx);
        }
    return out;
}

} // namespace

BuiltProblem build_problem(const RunConfig& cfg) {
    BuiltProblem built;
    built.config_hash = hex64(fnv1a(cfg.source_text));

    // Grid preconditions.
    const int dim = cfg.get_int("grid.dim", 1);
    if (dim != 1 && dim != 2)
        throw ConfigError("grid.dim must be 1 or 2", cfg.line_of("grid.dim"));
    const auto cells = cfg.get_doubles("grid.cells", {64});
    const auto lengths = cfg.get_doubles("grid.lengths", {1.0});
    if (static_cast<int>(cells.size()) < dim)
        throw ConfigError("grid.cells needs one entry per axis", cfg.line_of("grid.cells"));
    if (static_cast<int>(lengths.size()) < dim)
        throw ConfigError("grid.lengths needs one entry per axis", cfg.line_of("grid.lengths"));
    std::array<int, 2> ncells{0, 0};
    std::array<double, 2> lens{0.0, 0.0};
    for (int d = 0; d < dim; ++d) {
        ncells[d] = static_cast<int>(cells[d]);
        lens[d] = lengths[d];
        if (ncells[d] < 4)
            throw ConfigError("grid.cells must be >= 4 per axis (stencils undefined)",
                              cfg.line_of("grid.cells"));
        if (!(lens[d] > 0.0))
            throw ConfigError("grid.lengths must be positive", cfg.line_of("grid.lengths"));
    }
    Grid grid;
    try {
        grid = build_grid(dim, ncells, lens);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("grid: ") + e.what(), cfg.line_of("grid.cells"));
    }

    // Time grid.
    const double t_final = cfg.get_double("time.final", 0.1);
    const int steps = cfg.get_int("time.steps", 20);
    if (!(t_final > 0.0)) throw ConfigError("time.final must be positive", cfg.line_of("time.final"));
    if (steps < 1) throw ConfigError("time.steps must be >= 1", cfg.line_of("time.steps"));
    const double dt = t_final / steps;

    // Potentials: smooth parts are polynomials, C^3 by construction (A2).
    Potentials pot;
    pot.h.c_hat = cfg.get_double("potentials.c_hat", 1.0);
    if (!(pot.h.c_hat > 0.0))
        throw ConfigError("potentials.c_hat must be positive, violates (A2)",
                          cfg.line_of("potentials.c_hat"));
    pot.f2.coeffs = cfg.get_doubles("potentials.f2", {0.5, 0.0, -0.5});
    pot.g2.coeffs = cfg.get_doubles("potentials.g2", {0.5, 0.0, -0.5});
    for (double c : pot.f2.coeffs)
        if (!std::isfinite(c))
            throw ConfigError("potentials.f2 coefficients must be finite, violates (A2)",
                              cfg.line_of("potentials.f2"));
    for (double c : pot.g2.coeffs)
        if (!std::isfinite(c))
            throw ConfigError("potentials.g2 coefficients must be finite, violates (A2)",
                              cfg.line_of("potentials.g2"));

    pot.scaling.p_phi = cfg.get_double("quench.phi_exponent", 1.0);
    pot.scaling.p_psi = cfg.get_double("quench.psi_exponent", 1.0);
    pot.scaling.c_phipsi = cfg.get_double("quench.c_phipsi", 1.0);
    try {
        pot.scaling.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("quench scaling: ") + e.what(),
                          cfg.line_of("quench.phi_exponent"));
    }

    // Initial data: strict separation from the obstacle (A3); the strict bound
    // also provides the initial multiplier selection required by (A4).
    const std::string y0_expr = cfg.get_string("initial.y0", "0");
    Vector y0(grid.num_nodes);
    {
        Expression expr = Expression::parse(y0_expr);
        for (int i = 0; i < grid.num_nodes; ++i) {
            EvalContext ctx;
            ctx.x = grid.coords(i, 0);
            ctx.y = dim == 2 ? grid.coords(i, 1) : 0.0;
            y0(i) = expr.eval(ctx);
        }
    }
    if (!(y0.cwiseAbs().maxCoeff() < 1.0))
        throw ConfigError("initial.y0 must satisfy -1 < y0 < 1 on the closed domain, "
                          "violates (A3)",
                          cfg.line_of("initial.y0"));
    const double m0 = grid.mean_value(y0);
    if (!(m0 > -1.0 && m0 < 1.0))
        throw ConfigError("mean of initial.y0 must lie in (-1,1), violates (A3)",
                          cfg.line_of("initial.y0"));

    // Cost weights (A1)/(A6).
    CostWeights weights;
    weights.beta1 = cfg.get_double("cost.beta1", 0.0);
    weights.beta2 = cfg.get_double("cost.beta2", 0.0);
    weights.beta3 = cfg.get_double("cost.beta3", 0.0);
    weights.beta4 = cfg.get_double("cost.beta4", 0.0);
    weights.beta5 = cfg.get_double("cost.beta5", 0.0);
    for (const char* key : {"cost.beta1", "cost.beta2", "cost.beta3", "cost.beta4", "cost.beta5"})
        if (cfg.get_double(key, 0.0) < 0.0)
            throw ConfigError(std::string(key) + " must be nonnegative, violates (A1)",
                              cfg.line_of(key));
    if (weights.beta1 + weights.beta2 + weights.beta3 + weights.beta4 + weights.beta5 == 0.0)
        throw ConfigError("cost weights must not all vanish, violates (A1)",
                          cfg.line_of("cost.beta1"));
    if (weights.beta3 != 0.0)
        throw ConfigError("cost.beta3 must be zero (final-time tracking disabled), "
                          "violates assumption (A6)",
                          cfg.line_of("cost.beta3"));
    if (weights.beta4 != 0.0)
        throw ConfigError("cost.beta4 must be zero (final-time tracking disabled), "
                          "violates assumption (A6)",
                          cfg.line_of("cost.beta4"));

    // Targets (A1: square-integrable data — finite values on the grid).
    Targets targets;
    targets.z_q = bulk_data(cfg, "cost.z_q", "0", grid, steps, dt);
    targets.z_sigma = boundary_data(cfg, "cost.z_sigma", "0", grid, steps, dt);
    targets.z_omega = Vector::Zero(grid.num_nodes);
    targets.z_gamma = Vector::Zero(grid.num_boundary());
    if (cfg.has("cost.z_omega")) {
        const auto m = bulk_data(cfg, "cost.z_omega", "0", grid, 0, dt);
        targets.z_omega = m.row(0).transpose();
    }
    if (cfg.has("cost.z_gamma")) {
        const auto m = boundary_data(cfg, "cost.z_gamma", "0", grid, 0, dt);
        targets.z_gamma = m.row(0).transpose();
    }
    if (!targets.z_q.allFinite() || !targets.z_sigma.allFinite())
        throw ConfigError("targets must be finite on the grid, violates (A1)",
                          cfg.line_of("cost.z_q"));

    // Control bounds and budget ((A1) ordering, (A5) boundedness).
    ControlField control;
    control.lower = boundary_data(cfg, "control.lower", "-1", grid, steps, dt);
    control.upper = boundary_data(cfg, "control.upper", "1", grid, steps, dt);
    control.values = boundary_data(cfg, "control.initial", "0", grid, steps, dt);
    control.m0_budget = cfg.get_double("control.m0", 10.0);
    if ((control.lower.array() > control.upper.array()).any())
        throw ConfigError("control bounds must satisfy lower <= upper everywhere (admissible "
                          "set nonempty), violates (A1)",
                          cfg.line_of("control.lower"));
    if (!control.lower.allFinite() || !control.upper.allFinite())
        throw ConfigError("control bounds must be bounded, violates (A5)",
                          cfg.line_of("control.lower"));
    if (!(control.m0_budget > 0.0))
        throw ConfigError("control.m0 must be positive, violates (A5)",
                          cfg.line_of("control.m0"));
    control.values = project_admissible(control.values, control.lower, control.upper);

    // Solver knobs.
    StepControls controls;
    controls.newton_tol = cfg.get_double("newton.tol", 1e-10);
    controls.newton_max_iter = cfg.get_int("newton.max_iter", 50);
    controls.retry_cap = cfg.get_int("newton.retry_cap", 5);
    if (!(controls.newton_tol > 0.0))
        throw ConfigError("newton.tol must be positive", cfg.line_of("newton.tol"));

    built.linear_tol = cfg.get_double("linear.tol", 1e-10);
    if (!(built.linear_tol > 0.0))
        throw ConfigError("linear.tol must be positive", cfg.line_of("linear.tol"));

    built.setup.grid = std::move(grid);
    built.setup.pot = std::move(pot);
    built.setup.y0 = std::move(y0);
    built.setup.t_final = t_final;
    built.setup.steps = steps;
    built.setup.weights = weights;
    built.setup.targets = std::move(targets);
    built.setup.controls = controls;
    built.control = std::move(control);

    // Continuation schedule and optimizer.
    built.schedule.alpha0 = cfg.get_double("quench.alpha0", 1.0);
    built.schedule.ratio = cfg.get_double("quench.ratio", 0.5);
    built.schedule.alpha_min = cfg.get_double("quench.alpha_min", 1.0 / 1024.0);
    built.schedule.tol_factor = cfg.get_double("optimizer.quench_tol_factor", 1e-4);
    built.schedule.opt.tol = cfg.get_double("optimizer.tol", 1e-7);
    built.schedule.opt.max_iter = cfg.get_int("optimizer.max_iter", 2000);
    built.schedule.opt.armijo = cfg.get_double("optimizer.armijo", 1e-4);
    built.schedule.opt.backtrack = cfg.get_double("optimizer.backtrack", 0.5);
    built.schedule.opt.step_min = cfg.get_double("optimizer.step_min", 1e-6);
    built.schedule.opt.step_max = cfg.get_double("optimizer.step_max", 1e3);
    built.schedule.opt.initial_step = cfg.get_double("optimizer.initial_step", 1.0);
    built.schedule.opt.max_backtracks = cfg.get_int("optimizer.max_backtracks", 60);
    built.schedule.opt.sigma_penalty = cfg.get_double("control.penalty", 0.0);
    try {
        built.schedule.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("quench schedule: ") + e.what(),
                          cfg.line_of("quench.alpha0"));
    }

    // Oracle options.
    built.oracle.inner_cap = cfg.get_int("oracle.inner_cap", 10000);
    built.oracle.outer_cap = cfg.get_int("oracle.outer_cap", 1000);
    built.oracle.outer_tol = cfg.get_double("oracle.outer_tol", 1e-9);
    built.fd_spec.steps = cfg.get_doubles("oracle.fd_steps", {1e-3, 1e-4, 1e-5, 1e-6});
    built.fd_spec.n_directions = cfg.get_int("oracle.fd_directions", 20);
    built.gradient_tol = cfg.get_double("oracle.gradient_tol", 1e-6);
    built.compare_threshold = cfg.get_double("oracle.compare_threshold", 5e-3);

    built.output_dir = cfg.get_string("output.dir", "runs/out");
    built.seed = static_cast<std::uint64_t>(cfg.get_double("output.seed", 20240801.0));
    built.fd_spec.seed = built.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull;

    built.setup.validate();
    return built;
}

} // namespace quench
