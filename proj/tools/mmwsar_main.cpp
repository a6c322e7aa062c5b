#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "mmwsar/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 2;
constexpr int kExitNumericError = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw mmwsar::ConfigError("cannot open file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

mmwsar::ExperimentConfig load_with_overrides(const std::string& config_path,
                                             std::optional<std::uint64_t> seed,
                                             std::optional<std::string> out_dir) {
    mmwsar::ExperimentConfig cfg = mmwsar::parse_config(slurp(config_path));
    if (seed) cfg.seed = *seed;
    if (out_dir) cfg.output_dir = *out_dir;
    return cfg;
}

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<std::string> out_dir) {
    const mmwsar::ExperimentConfig cfg = load_with_overrides(config_path, seed, out_dir);
    const mmwsar::ExperimentResult res = mmwsar::run_experiment_to_dir(cfg, cfg.output_dir);
    std::cout << "wrote artifacts to " << cfg.output_dir << "\n";
    std::cout << mmwsar::metrics_json(res);
    return kExitOk;
}

int sweep_command(const std::string& config_path, const std::string& grid_path,
                  std::optional<std::string> out_dir, unsigned jobs) {
    const std::string base = slurp(config_path);
    const std::string grid = slurp(grid_path);
    std::string out = out_dir.value_or("sweep_out");
    const auto rows = mmwsar::run_sweep(base, grid, out, jobs);
    std::cout << "wrote " << rows.size() << " cells to " << out << "/sweep.csv\n";
    return kExitOk;
}

int validate_command(const std::string& config_path) {
    const mmwsar::ExperimentConfig cfg = mmwsar::parse_config(slurp(config_path));
    std::cout << mmwsar::resolved_config_json(cfg);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"near-field mmWave SAR imaging and waveform-attack simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string grid_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    unsigned jobs = 1;

    auto* run = app.add_subcommand("run", "run one experiment from a JSON config");
    run->add_option("config", config_path, "config JSON path")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");

    auto* sweep = app.add_subcommand("sweep", "cartesian parameter sweep");
    sweep->add_option("config", config_path, "base config JSON path")->required();
    sweep->add_option("--grid", grid_path, "sweep grid JSON path")->required();
    sweep->add_option("--jobs", jobs, "parallel cells");
    sweep->add_option("--out", out_dir, "output directory");

    auto* validate = app.add_subcommand("validate", "dry-run config checks");
    validate->add_option("config", config_path, "config JSON path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return run_command(config_path, seed, out_dir);
        if (sweep->parsed()) return sweep_command(config_path, grid_path, out_dir, jobs);
        if (validate->parsed()) return validate_command(config_path);
    } catch (const mmwsar::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumericError;
    } catch (const mmwsar::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
