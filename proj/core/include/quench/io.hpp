#pragma once

#include "quench/config.hpp"

#include <map>
#include <string>

namespace quench {

/// Doubles printed with 17 significant digits so regression diffs are exact.
std::string format17(double v);

/// Writes the per-run artifact files into one directory and records every
/// file for the closing manifest.
class RunWriter {
public:
    explicit RunWriter(std::string dir);

    const std::string& dir() const { return dir_; }

    void write_state_series(const Grid& grid, const StateTrajectory& traj,
                            const std::string& prefix = "state");
    void write_adjoint_series(const Grid& grid, const AdjointTrajectory& adjoint,
                              const std::string& prefix = "adjoint");
    /// JSON manifest of one trajectory: times, per-step solver diagnostics,
    /// boundedness monitors, and the series kind tag.
    void write_trajectory_manifest(const StateTrajectory& traj, const std::string& kind = "state",
                                   const std::string& name = "trajectory.json");
    void write_adjoint_manifest(const AdjointTrajectory& adjoint,
                                const std::string& name = "adjoint_trajectory.json");
    void write_boundary(const Grid& grid, const StateTrajectory& traj, const BoundaryField& u,
                        const AdjointTrajectory* adjoint = nullptr);
    void write_metrics(const Grid& grid, const Potentials& pot, const StateTrajectory& traj,
                       const BoundaryField& u, double alpha);
    void write_quench_table(const QuenchReport& report);
    void write_quench_report(const QuenchReport& report);
    void write_opt_result(const OptResult& result);
    void write_gradient_report(const FDGradientReport& report);
    void write_compare_table(const std::vector<QuenchObstacleRow>& rows);
    void write_control(const BoundaryField& u, const std::string& name);

    /// Writes manifest.json listing every file this writer produced, the
    /// config hash, the command that produced the run, headline metrics, and
    /// failure records. Call last.
    void finalize(const std::string& config_hash,
                  const std::map<std::string, double>& headline,
                  const std::vector<std::string>& failures = {},
                  const std::string& command = "");

private:
    std::ofstream open(const std::string& name);
    std::string dir_;
    std::vector<std::string> files_;
};

} // namespace quench
