#pragma once

#include "quench/control.hpp"
#include "quench/deep_quench.hpp"
#include "quench/oracles.hpp"

#include <cstdint>
#include <map>
#include <string>

namespace quench {

/// Raw key-value view of a run config: `[section]` headers, `key = value`
/// lines, `#` comments. Keys keep the line they were defined on so validation
/// errors stay line-referenced.
struct RunConfig {
    struct Entry {
        std::string value;
        int line = 0;
    };
    std::map<std::string, Entry> entries; // "section.key" -> entry
    std::string source_text;

    bool has(const std::string& key) const { return entries.count(key) != 0; }
    const Entry* find(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    int get_int(const std::string& key, int fallback) const;
    std::vector<double> get_doubles(const std::string& key,
                                    const std::vector<double>& fallback) const;
    int line_of(const std::string& key) const;
};

RunConfig parse_config_text(const std::string& text);
RunConfig parse_config_file(const std::string& path);

/// Everything a pipeline needs, built and validated from a RunConfig. The
/// validation rules are named (A1)..(A6) in error messages; see the README
/// config schema for their meaning.
struct BuiltProblem {
    ProblemSetup setup;
    ControlField control; // initial guess with bounds and budget
    QuenchSchedule schedule;
    ObstacleOptions oracle;
    FDGradientSpec fd_spec;
    double gradient_tol = 1e-6;
    double compare_threshold = 5e-3;
    double linear_tol = 1e-10;
    std::string output_dir = "runs/out";
    std::uint64_t seed = 0;
    std::string config_hash;
};

/// Validates every module precondition and assembles the problem. Throws
/// ConfigError with a line reference and the violated rule name on failure.
BuiltProblem build_problem(const RunConfig& config);

} // namespace quench
