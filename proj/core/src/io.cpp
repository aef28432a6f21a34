#include "quench/io.hpp"

#include "quench/errors.hpp"
#include "quench/state.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace quench {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

RunWriter::RunWriter(std::string dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_);
}

std::ofstream RunWriter::open(const std::string& name) {
    const fs::path path = fs::path(dir_) / name;
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
    files_.push_back(name);
    return out;
}

void RunWriter::write_state_series(const Grid& grid, const StateTrajectory& traj,
                                   const std::string& prefix) {
    for (int k = 0; k <= traj.steps(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_t%04d.csv", prefix.c_str(), k);
        std::ofstream out = open(name);
        out << (grid.dim == 1 ? "x,value,w\n" : "x,y,value,w\n");
        const StateSnapshot& s = traj.snapshots[k];
        for (int i = 0; i < grid.num_nodes; ++i) {
            out << format17(grid.coords(i, 0));
            if (grid.dim == 2) out << ',' << format17(grid.coords(i, 1));
            out << ',' << format17(s.y.bulk(i)) << ',' << format17(s.w(i)) << '\n';
        }
    }
}

void RunWriter::write_adjoint_series(const Grid& grid, const AdjointTrajectory& adjoint,
                                     const std::string& prefix) {
    for (int k = 0; k <= adjoint.steps(); ++k) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_t%04d.csv", prefix.c_str(), k);
        std::ofstream out = open(name);
        out << (grid.dim == 1 ? "x,value,p\n" : "x,y,value,p\n");
        const AdjointSnapshot& s = adjoint.snapshots[k];
        for (int i = 0; i < grid.num_nodes; ++i) {
            out << format17(grid.coords(i, 0));
            if (grid.dim == 2) out << ',' << format17(grid.coords(i, 1));
            out << ',' << format17(s.q.bulk(i)) << ',' << format17(s.p(i)) << '\n';
        }
    }
}

void RunWriter::write_trajectory_manifest(const StateTrajectory& traj, const std::string& kind,
                                          const std::string& name) {
    json j;
    j["kind"] = kind;
    j["dt"] = traj.dt;
    j["alpha"] = traj.alpha;
    j["m0"] = traj.m0;
    json times = json::array(), iters = json::array(), residuals = json::array(),
         margins = json::array();
    for (const StateSnapshot& s : traj.snapshots) {
        times.push_back(s.t);
        iters.push_back(s.newton_iterations);
        residuals.push_back(s.newton_residual);
        margins.push_back(s.bound_margin);
    }
    j["times"] = times;
    j["newton_iterations"] = iters;
    j["newton_residuals"] = residuals;
    j["bound_margins"] = margins;
    j["monitors"] = {{"dt_l2_bulk", traj.monitors.dt_l2_bulk},
                     {"dt_l2_boundary", traj.monitors.dt_l2_boundary},
                     {"sup_h1_bulk", traj.monitors.sup_h1_bulk},
                     {"sup_h1_boundary", traj.monitors.sup_h1_boundary},
                     {"l2_h2_bulk", traj.monitors.l2_h2_bulk},
                     {"l2_h2_boundary", traj.monitors.l2_h2_boundary},
                     {"max_mass_drift", traj.monitors.max_mass_drift},
                     {"min_bound_margin", traj.monitors.min_bound_margin}};
    std::ofstream out = open(name);
    out << j.dump(2) << '\n';
}

void RunWriter::write_adjoint_manifest(const AdjointTrajectory& adjoint,
                                       const std::string& name) {
    json j;
    j["kind"] = "adjoint";
    j["dt"] = adjoint.dt;
    j["alpha"] = adjoint.alpha;
    json times = json::array();
    for (const AdjointSnapshot& s : adjoint.snapshots) times.push_back(s.t);
    j["times"] = times;
    j["monitors"] = {{"sup_h_norm", adjoint.sup_h_norm}, {"l2_v_norm", adjoint.l2_v_norm}};
    std::ofstream out = open(name);
    out << j.dump(2) << '\n';
}

void RunWriter::write_boundary(const Grid& grid, const StateTrajectory& traj,
                               const BoundaryField& u, const AdjointTrajectory* adjoint) {
    std::ofstream out = open("boundary.csv");
    out << "time,node,y_gamma,u_gamma,q_gamma\n";
    for (int k = 0; k <= traj.steps(); ++k) {
        for (int j = 0; j < grid.num_boundary(); ++j) {
            out << format17(traj.snapshots[k].t) << ',' << j << ','
                << format17(traj.snapshots[k].y.trace(j)) << ',' << format17(u(k, j)) << ',';
            out << format17(adjoint ? adjoint->snapshots[k].q.trace(j) : 0.0) << '\n';
        }
    }
}

void RunWriter::write_metrics(const Grid& grid, const Potentials& pot,
                              const StateTrajectory& traj, const BoundaryField& u, double alpha) {
    std::ofstream out = open("metrics.csv");
    out << "time,mass,energy,bound_margin\n";
    for (int k = 0; k <= traj.steps(); ++k) {
        const StateSnapshot& s = traj.snapshots[k];
        const double mass = grid.mean_value(s.y.bulk);
        const double e = energy(grid, pot, s, u.row(k).transpose(), alpha);
        out << format17(s.t) << ',' << format17(mass) << ',' << format17(e) << ','
            << format17(s.bound_margin) << '\n';
    }
}

void RunWriter::write_quench_table(const QuenchReport& report) {
    std::ofstream out = open("quench.csv");
    out << "alpha,cost,adapted_cost,increment,lambda_q,lambda_q_boundary,interior_decay,"
           "concentration_sup,concentration_bound,vi_residual,fixed_point_gap,budget_norm\n";
    for (const QuenchStage& st : report.stages) {
        out << format17(st.alpha) << ',' << format17(st.cost) << ','
            << format17(st.adapted_cost) << ',' << format17(st.control_increment) << ','
            << format17(st.metrics.lambda_q_integral) << ','
            << format17(st.metrics.lambda_q_boundary_integral) << ','
            << format17(st.metrics.interior_decay) << ','
            << format17(st.metrics.concentration_sup) << ','
            << format17(st.metrics.concentration_bound) << ',' << format17(st.vi_residual) << ','
            << format17(st.fixed_point_gap) << ',' << format17(st.budget_norm) << '\n';
    }
}

namespace {

json stage_to_json(const QuenchStage& st) {
    json j;
    j["alpha"] = st.alpha;
    j["cost"] = st.cost;
    j["adapted_cost"] = st.adapted_cost;
    j["control_increment"] = st.control_increment;
    j["vi_residual"] = st.vi_residual;
    j["fixed_point_gap"] = st.fixed_point_gap;
    j["budget_norm"] = st.budget_norm;
    j["opt_iterations"] = st.opt_iterations;
    j["opt_converged"] = st.opt_converged;
    j["failed"] = st.failed;
    if (st.failed) j["error"] = st.error;
    j["metrics"] = {{"lambda_q_integral", st.metrics.lambda_q_integral},
                    {"lambda_q_boundary_integral", st.metrics.lambda_q_boundary_integral},
                    {"interior_decay", st.metrics.interior_decay},
                    {"interior_decay_boundary", st.metrics.interior_decay_boundary},
                    {"concentration_sup", st.metrics.concentration_sup},
                    {"concentration_bound", st.metrics.concentration_bound},
                    {"sign_certificate_bulk", st.metrics.sign_certificate_bulk},
                    {"sign_certificate_boundary", st.metrics.sign_certificate_boundary},
                    {"sup_q", st.metrics.sup_q}};
    j["state_monitors"] = {{"dt_l2_bulk", st.state_monitors.dt_l2_bulk},
                           {"dt_l2_boundary", st.state_monitors.dt_l2_boundary},
                           {"sup_h1_bulk", st.state_monitors.sup_h1_bulk},
                           {"sup_h1_boundary", st.state_monitors.sup_h1_boundary},
                           {"l2_h2_bulk", st.state_monitors.l2_h2_bulk},
                           {"l2_h2_boundary", st.state_monitors.l2_h2_boundary},
                           {"max_mass_drift", st.state_monitors.max_mass_drift},
                           {"min_bound_margin", st.state_monitors.min_bound_margin}};
    j["adjoint_sup_h"] = st.adjoint_sup_h;
    j["adjoint_l2_v"] = st.adjoint_l2_v;
    return j;
}

} // namespace

void RunWriter::write_quench_report(const QuenchReport& report) {
    json j;
    j["completed"] = report.completed;
    j["adapted"] = report.adapted;
    j["failure_index"] = report.failure_index;
    j["stages"] = json::array();
    for (const QuenchStage& st : report.stages) j["stages"].push_back(stage_to_json(st));
    std::ofstream out = open("quench_report.json");
    out << j.dump(2) << '\n';
}

void RunWriter::write_opt_result(const OptResult& result) {
    json j;
    j["cost"] = result.cost;
    j["adapted_cost"] = result.adapted_cost;
    j["vi_residual"] = result.vi_residual;
    j["fixed_point_gap"] = result.fixed_point_gap;
    j["budget_norm"] = result.budget_norm;
    j["budget_active"] = result.budget_active;
    j["converged"] = result.converged;
    j["iterations"] = result.iterations;
    j["cost_history"] = result.cost_history;
    j["gradient_map_history"] = result.gradient_map_history;
    j["step_history"] = result.step_history;
    std::ofstream out = open("opt_result.json");
    out << j.dump(2) << '\n';
}

void RunWriter::write_gradient_report(const FDGradientReport& report) {
    std::ofstream out = open("gradient_check.csv");
    out << "direction,step,fd_value,adjoint_value,rel_error\n";
    for (const FDGradientRow& row : report.table)
        out << row.direction << ',' << format17(row.step) << ',' << format17(row.fd_value) << ','
            << format17(row.adjoint_value) << ',' << format17(row.rel_error) << '\n';
}

void RunWriter::write_compare_table(const std::vector<QuenchObstacleRow>& rows) {
    std::ofstream out = open("oracle_compare.csv");
    out << "alpha,l2_distance\n";
    for (const QuenchObstacleRow& row : rows)
        out << format17(row.alpha) << ',' << format17(row.l2_distance) << '\n';
}

void RunWriter::write_control(const BoundaryField& u, const std::string& name) {
    std::ofstream out = open(name);
    for (Eigen::Index k = 0; k < u.rows(); ++k) {
        for (Eigen::Index j = 0; j < u.cols(); ++j) {
            if (j) out << ',';
            out << format17(u(k, j));
        }
        out << '\n';
    }
}

void RunWriter::finalize(const std::string& config_hash,
                         const std::map<std::string, double>& headline,
                         const std::vector<std::string>& failures, const std::string& command) {
    json j;
    j["config_hash"] = config_hash;
    j["artifact_version"] = "0.1.0";
    if (!command.empty()) j["command"] = command;
    const auto now = std::chrono::system_clock::now();
    j["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    j["files"] = files_;
    json h;
    for (const auto& [k, v] : headline) h[k] = v;
    j["headline"] = h;
    j["failures"] = failures;
    const fs::path path = fs::path(dir_) / "manifest.json";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open output file '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

} // namespace quench
