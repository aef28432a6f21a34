// Command-line driver: simulate / optimize / quench the boundary-controlled
// phase system, verify gradients against finite differences, and compare the
// barrier path against the obstacle oracle.

#include "quench/config.hpp"
#include "quench/errors.hpp"
#include "quench/io.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;

std::string resolve_output_dir(const std::string& configured, const std::string& override_dir) {
    std::string dir = override_dir.empty() ? configured : override_dir;
    if (const char* root = std::getenv("QUENCHCTL_OUTPUT_ROOT"); root && *root)
        dir = std::string(root) + "/" + dir;
    return dir;
}

quench::BuiltProblem load(const std::string& config_path) {
    const quench::RunConfig cfg = quench::parse_config_file(config_path);
    return quench::build_problem(cfg);
}

int run_simulate(const std::string& config_path, const std::string& out_override, double alpha) {
    quench::BuiltProblem built = load(config_path);
    if (alpha <= 0.0) alpha = built.schedule.alpha_min;
    const auto& setup = built.setup;
    const quench::StateTrajectory traj =
        quench::solve_state(setup.grid, setup.pot, setup.y0, built.control.values, alpha,
                            setup.t_final, setup.steps, setup.controls);

    quench::RunWriter writer(resolve_output_dir(built.output_dir, out_override));
    writer.write_state_series(setup.grid, traj);
    writer.write_trajectory_manifest(traj);
    writer.write_boundary(setup.grid, traj, built.control.values);
    writer.write_metrics(setup.grid, setup.pot, traj, built.control.values, alpha);
    writer.finalize(built.config_hash,
                    {{"alpha", alpha},
                     {"mass_drift", traj.monitors.max_mass_drift},
                     {"min_bound_margin", traj.monitors.min_bound_margin}},
                    {}, "simulate");
    std::cout << "simulate: " << setup.steps << " steps, max mass drift "
              << quench::format17(traj.monitors.max_mass_drift) << ", min bound margin "
              << quench::format17(traj.monitors.min_bound_margin) << "\n"
              << "output: " << writer.dir() << "\n";
    return kExitOk;
}

int run_optimize(const std::string& config_path, const std::string& out_override, double alpha) {
    quench::BuiltProblem built = load(config_path);
    if (alpha <= 0.0) alpha = built.schedule.alpha_min;
    const auto& setup = built.setup;
    quench::OptOptions opts = built.schedule.opt;
    const quench::OptResult res =
        quench::projected_gradient_descent(setup, built.control, alpha, std::nullopt, opts);

    quench::RunWriter writer(resolve_output_dir(built.output_dir, out_override));
    const quench::ReducedGradientResult rg =
        quench::reduced_gradient(setup, res.control.values, alpha);
    writer.write_state_series(setup.grid, rg.trajectory);
    writer.write_adjoint_series(setup.grid, rg.adjoint);
    writer.write_trajectory_manifest(rg.trajectory);
    writer.write_adjoint_manifest(rg.adjoint);
    writer.write_boundary(setup.grid, rg.trajectory, res.control.values, &rg.adjoint);
    writer.write_metrics(setup.grid, setup.pot, rg.trajectory, res.control.values, alpha);
    writer.write_opt_result(res);
    writer.write_control(res.control.values, "control.csv");
    writer.finalize(built.config_hash,
                    {{"alpha", alpha},
                     {"cost", res.cost},
                     {"vi_residual", res.vi_residual},
                     {"fixed_point_gap", res.fixed_point_gap}},
                    {}, "optimize");
    std::cout << "optimize: " << res.iterations << " iterations, cost "
              << quench::format17(res.cost) << ", vi residual "
              << quench::format17(res.vi_residual) << "\n"
              << "output: " << writer.dir() << "\n";
    return res.converged ? kExitOk : kExitSolver;
}

int run_quench_cmd(const std::string& config_path, const std::string& out_override, bool adapted,
                   const std::string& anchor_csv) {
    quench::BuiltProblem built = load(config_path);
    const auto& setup = built.setup;

    std::optional<quench::BoundaryField> anchor;
    if (adapted) {
        if (anchor_csv.empty()) {
            // Anchor at the plain-run optimum, the intended adapted-mode usage.
            const quench::QuenchReport plain = quench::run_quench(setup, built.schedule,
                                                                  built.control);
            if (!plain.completed) {
                std::cerr << "quench: plain continuation failed; cannot anchor\n";
                return kExitSolver;
            }
            anchor = plain.stages.back().control.values;
        } else {
            quench::BoundaryField a(setup.steps + 1, setup.grid.num_boundary());
            std::ifstream in(anchor_csv);
            if (!in) {
                std::cerr << "quench: cannot open anchor file " << anchor_csv << "\n";
                return kExitConfig;
            }
            std::string line;
            for (int k = 0; k <= setup.steps; ++k) {
                if (!std::getline(in, line)) {
                    std::cerr << "quench: anchor file too short\n";
                    return kExitConfig;
                }
                std::istringstream row(line);
                std::string cell;
                for (int j = 0; j < setup.grid.num_boundary(); ++j) {
                    if (!std::getline(row, cell, ',')) {
                        std::cerr << "quench: anchor row too short\n";
                        return kExitConfig;
                    }
                    a(k, j) = std::stod(cell);
                }
            }
            anchor = std::move(a);
        }
    }

    const quench::QuenchReport report =
        quench::run_quench(setup, built.schedule, built.control, anchor);

    quench::RunWriter writer(resolve_output_dir(built.output_dir, out_override));
    writer.write_quench_table(report);
    writer.write_quench_report(report);
    for (std::size_t n = 0; n < report.stages.size(); ++n) {
        if (report.stages[n].failed) continue;
        char name[64];
        std::snprintf(name, sizeof(name), "control_%02zu.csv", n);
        writer.write_control(report.stages[n].control.values, name);
    }
    if (report.completed) {
        writer.write_state_series(setup.grid, report.final_state, "final_state");
        writer.write_boundary(setup.grid, report.final_state,
                              report.stages.back().control.values, &report.final_adjoint);
        writer.write_metrics(setup.grid, setup.pot, report.final_state,
                             report.stages.back().control.values, report.stages.back().alpha);
    }
    std::vector<std::string> failures;
    for (const quench::QuenchStage& st : report.stages)
        if (st.failed) failures.push_back("alpha " + std::to_string(st.alpha) + ": " + st.error);
    std::map<std::string, double> headline;
    if (!report.stages.empty() && !report.stages.back().failed) {
        const quench::QuenchStage& last = report.stages.back();
        headline = {{"final_alpha", last.alpha},
                    {"final_cost", last.cost},
                    {"vi_residual", last.vi_residual},
                    {"fixed_point_gap", last.fixed_point_gap},
                    {"interior_decay", last.metrics.interior_decay}};
    }
    writer.finalize(built.config_hash, headline, failures,
                    adapted ? "quench --adapted" : "quench");

    for (const quench::QuenchStage& st : report.stages) {
        std::cout << "alpha " << quench::format17(st.alpha);
        if (st.failed)
            std::cout << "  FAILED: " << st.error << "\n";
        else
            std::cout << "  cost " << quench::format17(st.cost) << "  increment "
                      << quench::format17(st.control_increment) << "\n";
    }
    std::cout << "output: " << writer.dir() << "\n";
    return report.completed ? kExitOk : kExitSolver;
}

int run_check_gradient(const std::string& config_path, const std::string& out_override,
                       double alpha) {
    quench::BuiltProblem built = load(config_path);
    if (alpha <= 0.0) alpha = 1.0 / 32.0;
    const quench::FDGradientReport report =
        quench::fd_gradient(built.setup, built.control, alpha, built.fd_spec);

    quench::RunWriter writer(resolve_output_dir(built.output_dir, out_override));
    writer.write_gradient_report(report);
    writer.finalize(built.config_hash, {{"best_rel_error", report.best_rel_error}}, {},
                    "check-gradient");

    std::cout << "check-gradient: worst per-direction best relative error "
              << quench::format17(report.best_rel_error) << " over "
              << report.per_direction_best.size() << " directions\n"
              << "output: " << writer.dir() << "\n";
    return report.best_rel_error <= built.gradient_tol ? kExitOk : kExitSolver;
}

int run_oracle_compare(const std::string& config_path, const std::string& out_override) {
    quench::BuiltProblem built = load(config_path);
    const auto alphas = built.schedule.alphas();
    const auto rows = quench::compare_quench_to_obstacle(built.setup, built.control.values,
                                                         alphas, built.oracle);

    quench::RunWriter writer(resolve_output_dir(built.output_dir, out_override));
    writer.write_compare_table(rows);
    writer.finalize(built.config_hash, {{"final_distance", rows.back().l2_distance}}, {},
                    "oracle-compare");

    bool decreasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        decreasing = decreasing && rows[i].l2_distance < rows[i - 1].l2_distance;
    for (const auto& row : rows)
        std::cout << "alpha " << quench::format17(row.alpha) << "  distance "
                  << quench::format17(row.l2_distance) << "\n";
    std::cout << "output: " << writer.dir() << "\n";
    const bool ok = decreasing && rows.back().l2_distance <= built.compare_threshold;
    return ok ? kExitOk : kExitSolver;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Optimal boundary control of a conserved phase field with dynamic boundary "
                 "conditions: barrier-regularized solves, adjoint gradients, deep-quench "
                 "continuation, and obstacle-oracle checks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    double alpha = -1.0;
    bool adapted = false;
    std::string anchor_csv;

    auto add_common = [&](CLI::App* cmd, bool with_alpha = true) {
        cmd->add_option("-c,--config", config_path, "run config file")->required();
        cmd->add_option("-o,--output", out_override, "output directory override");
        if (with_alpha) cmd->add_option("--alpha", alpha, "barrier parameter override");
    };

    CLI::App* validate = app.add_subcommand("validate-config", "parse and validate a config");
    validate->add_option("-c,--config", config_path, "run config file")->required();

    add_common(app.add_subcommand("simulate", "solve the state system at one alpha"));
    add_common(app.add_subcommand("optimize", "projected gradient descent at one alpha"));
    CLI::App* quench_cmd =
        app.add_subcommand("quench", "deep-quench continuation over the schedule");
    add_common(quench_cmd, false);
    quench_cmd->add_flag("--adapted", adapted, "anchor the stages at a reference control");
    quench_cmd->add_option("--anchor", anchor_csv, "anchor control csv (default: plain-run optimum)");
    add_common(app.add_subcommand("check-gradient", "adjoint vs finite-difference gradient"));
    add_common(app.add_subcommand("oracle-compare", "barrier path vs obstacle oracle"), false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (app.got_subcommand("validate-config")) {
            load(config_path);
            std::cout << "config OK\n";
            return kExitOk;
        }
        if (app.got_subcommand("simulate")) return run_simulate(config_path, out_override, alpha);
        if (app.got_subcommand("optimize")) return run_optimize(config_path, out_override, alpha);
        if (app.got_subcommand("quench"))
            return run_quench_cmd(config_path, out_override, adapted, anchor_csv);
        if (app.got_subcommand("check-gradient"))
            return run_check_gradient(config_path, out_override, alpha);
        if (app.got_subcommand("oracle-compare"))
            return run_oracle_compare(config_path, out_override);
    } catch (const quench::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const quench::SolveError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return kExitSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitSolver;
    }
    return kExitConfig;
}
