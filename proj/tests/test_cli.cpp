#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#ifndef QUENCHCTL_PATH
#define QUENCHCTL_PATH "quenchctl"
#endif

namespace {

struct CommandResult {
    int exit_code = -1;
    std::string output;
};

CommandResult run_command(const std::string& args) {
    const std::string cmd = std::string(QUENCHCTL_PATH) + " " + args + " 2>&1";
    std::array<char, 4096> buf{};
    CommandResult result;
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WEXITSTATUS(status);
    return result;
}

std::filesystem::path write_config(const std::string& name, const std::string& extra = "") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "quench_cli_test";
    fs::create_directories(dir);
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << R"([grid]
dim = 1
cells = 16
lengths = 1.0

[time]
final = 0.02
steps = 4

[quench]
alpha0 = 0.5
ratio = 0.5
alpha_min = 0.25

[initial]
y0 = 0.3

[control]
lower = -1
upper = 1
initial = 0
m0 = 10

[cost]
beta1 = 1
beta2 = 1
beta5 = 0.01
z_q = 0.2
z_sigma = 0.2

[optimizer]
tol = 0.001
max_iter = 50

[output]
dir = )" << (dir / "out" / name).string()
        << "\n" << extra;
    return path;
}

} // namespace

TEST_CASE("validate-config accepts a good config") {
    const auto path = write_config("good.cfg");
    const CommandResult res = run_command("validate-config -c " + path.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("OK") != std::string::npos);
}

TEST_CASE("validate-config rejects a final-time weight citing the rule") {
    const auto path = write_config("bad.cfg", "[cost]\nbeta3 = 0.1\n");
    const CommandResult res = run_command("validate-config -c " + path.string());
    CHECK(res.exit_code == 1);
    CHECK(res.output.find("(A6)") != std::string::npos);
}

TEST_CASE("unknown flags and missing configs exit with a validation error") {
    CHECK(run_command("simulate --nonsense").exit_code == 1);
    CHECK(run_command("simulate -c /nonexistent/file.cfg").exit_code == 1);
}

TEST_CASE("simulate runs the constant stationary state") {
    namespace fs = std::filesystem;
    const auto path = write_config("sim.cfg");
    const CommandResult res = run_command("simulate -c " + path.string());
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("mass drift") != std::string::npos);

    // Constant initial data with zero control stays near-constant; the mass
    // drift printed must be tiny.
    const auto pos = res.output.find("max mass drift ");
    REQUIRE(pos != std::string::npos);
    const double drift = std::stod(res.output.substr(pos + 15));
    CHECK(drift <= 1e-9);
}

TEST_CASE("a 2d rectangle config validates and simulates") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "quench_cli_test";
    fs::create_directories(dir);
    const fs::path path = dir / "rect.cfg";
    {
        std::ofstream out(path);
        out << R"([grid]
dim = 2
cells = 6 5
lengths = 1.0 0.8

[time]
final = 0.01
steps = 2

[quench]
alpha0 = 0.5
ratio = 0.5
alpha_min = 0.5

[initial]
y0 = 0.3*cos(pi*x)*cos(pi*y/0.8)

[control]
lower = -1
upper = 1
initial = 0
m0 = 10

[cost]
beta1 = 1
beta2 = 1
beta5 = 0.01
z_q = 0.1
z_sigma = 0.1

[output]
dir = )" << (dir / "out" / "rect").string() << "\n";
    }
    CHECK(run_command("validate-config -c " + path.string()).exit_code == 0);
    const CommandResult res = run_command("simulate -c " + path.string());
    CHECK(res.exit_code == 0);
    const auto pos = res.output.find("max mass drift ");
    REQUIRE(pos != std::string::npos);
    CHECK(std::stod(res.output.substr(pos + 15)) <= 1e-9);
}

TEST_CASE("optimize signals non-convergence through the exit code") {
    const auto path = write_config("opt_fail.cfg", "[optimizer]\ntol = 1e-16\nmax_iter = 1\n");
    const CommandResult res = run_command("optimize -c " + path.string() + " --alpha 0.5");
    CHECK(res.exit_code == 2);
}

TEST_CASE("check-gradient reports a small keystone error") {
    const auto path = write_config("grad.cfg", "[oracle]\nfd_directions = 3\n");
    const CommandResult res = run_command("check-gradient -c " + path.string() + " --alpha 0.25");
    CHECK(res.exit_code == 0);
    const auto pos = res.output.find("relative error ");
    REQUIRE(pos != std::string::npos);
    const double err = std::stod(res.output.substr(pos + 15));
    CHECK(err <= 1e-6);
}
