#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "mmwsar/attack.hpp"
#include "mmwsar/metrics.hpp"

namespace mmwsar {

/// Scene description as configured: a built-in shape name or an explicit
/// reflector list. Built-ins place reflectors on voxel centers relative to
/// the grid ("point", "pair", "triangle", "lshape", "bar", "square").
struct SceneSpec {
    std::string shape;  // empty means explicit reflectors
    double amplitude = 0.005;
    std::vector<PointReflector> reflectors;
    friend bool operator==(const SceneSpec&, const SceneSpec&) = default;
};

Scene build_scene(const SceneSpec& spec, const ImageGrid& grid);

struct DiaSettings {
    double lambda = 1e-6;
    std::optional<double> step;
    int iters = 300;
    PowerMode power_mode = PowerMode::Regularized;
    double power_cap = 0.0;
    double tol = 1e-9;
};

struct AttackSection {
    std::string strategy = "none";  // none | conceal | swap | random
    Vec3 attacker_position{0.05, 0.0, 0.23};
    DiaSettings dia;
    double random_power = 10.0;
    std::optional<SceneSpec> swap_scene;
};

struct ExperimentConfig {
    RadarConfig radar;
    ApertureGrid aperture;
    ImageGrid image;
    SceneSpec scene;
    ReconstructorSpec reconstructor;
    AttackSection attack;
    std::optional<double> snr_db;
    std::string operator_mode = "auto";  // auto | matrix_free | materialized
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    void validate() const;
};

/// Parse a JSON config. Unknown keys are errors; missing keys take defaults.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Config echo with every default materialized; parsing it back reproduces
/// the same run.
std::string resolved_config_json(const ExperimentConfig& cfg);

struct ExperimentResult {
    ReflectivityImage clean;
    ReflectivityImage target;
    ReflectivityImage adv;
    CVec w;
    MetricsReport metrics;
    std::string strategy;
};

/// Algorithm-1 offline run: build scene, synthesize measurements, optimize
/// the attack, reconstruct clean and adversarial images, compute metrics.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

std::string metrics_json(const ExperimentResult& result);

/// run_experiment plus artifacts: clean/target/adv as 16-bit PGM and MMWIMG1
/// raw dumps, weights.json, metrics.json, resolved_config.json, and a
/// manifest with SHA-256 content hashes.
ExperimentResult run_experiment_to_dir(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir);

struct SweepCellRow {
    std::size_t cell = 0;
    std::vector<std::pair<std::string, std::string>> params;  // path -> value (JSON text)
    std::size_t n_seeds = 0;
    std::map<std::string, double> stats;  // <metric>_mean / _std / _inf_count
};

/// Cartesian sweep over dotted-path overrides; one CSV row per cell with
/// mean/std across seeds. Cells run in parallel up to `jobs`.
std::vector<SweepCellRow> run_sweep(const std::string& base_config_json,
                                    const std::string& grid_json,
                                    const std::filesystem::path& out_dir, unsigned jobs);

std::string sweep_csv(const std::vector<SweepCellRow>& rows);

// -- binary image formats ---------------------------------------------------

/// 16-bit binary PGM (P5, maxval 65535) of the per-image-normalized magnitude.
void write_pgm16(const std::filesystem::path& path, const ReflectivityImage& img);

/// Raw complex dump. Little-endian, 64-byte header: magic "MMWIMG1\0",
/// u32 nvx, u32 nvy, f64 dvx, f64 dvy, f64 z0, zero padding to 64 bytes,
/// then row-major float64 (re, im) pairs.
void write_mmwimg(const std::filesystem::path& path, const ReflectivityImage& img);
ReflectivityImage read_mmwimg(const std::filesystem::path& path);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace mmwsar
