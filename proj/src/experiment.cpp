#include "mmwsar/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace mmwsar {

using ojson = nlohmann::ordered_json;

// ---- built-in scenes -------------------------------------------------------

Scene build_scene(const SceneSpec& spec, const ImageGrid& grid) {
    if (spec.shape.empty()) {
        Scene s = Scene::points(grid.z0, spec.reflectors);
        rasterize(s, grid);  // extent validation
        return s;
    }

    const auto at = [&](long long ix, long long iy) {
        const auto cx = static_cast<long long>(grid.nx / 2);
        const auto cy = static_cast<long long>(grid.ny / 2);
        const auto jx = std::clamp<long long>(cx + ix, 0, static_cast<long long>(grid.nx) - 1);
        const auto jy = std::clamp<long long>(cy + iy, 0, static_cast<long long>(grid.ny) - 1);
        const Vec3 p = grid.voxel_position(static_cast<std::size_t>(jy) * grid.nx +
                                           static_cast<std::size_t>(jx));
        return PointReflector{p.x, p.y, Complex{spec.amplitude, 0.0}};
    };
    const auto q = [&](std::size_t n) {
        return std::max<long long>(1, static_cast<long long>(n) / 4);
    };
    const long long qx = q(grid.nx);
    const long long qy = q(grid.ny);

    std::vector<PointReflector> pts;
    if (spec.shape == "point") {
        pts = {at(0, 0)};
    } else if (spec.shape == "pair") {
        pts = {at(-qx, 0), at(qx, 0)};
    } else if (spec.shape == "triangle") {
        pts = {at(-qx, -qy), at(qx, -qy), at(0, qy)};
    } else if (spec.shape == "lshape") {
        pts = {at(-qx, -qy), at(-qx, 0), at(-qx, qy), at(0, -qy), at(qx, -qy)};
    } else if (spec.shape == "bar") {
        pts = {at(-qx, 0), at(-qx / 2, 0), at(0, 0), at(qx / 2, 0), at(qx, 0)};
    } else if (spec.shape == "square") {
        pts = {at(-qx, -qy), at(0, -qy), at(qx, -qy), at(-qx, 0),
               at(qx, 0),   at(-qx, qy), at(0, qy),  at(qx, qy)};
    } else {
        throw ConfigError("unknown scene shape: " + spec.shape);
    }
    return Scene::points(grid.z0, std::move(pts));
}

// ---- config parsing --------------------------------------------------------

namespace {

void check_keys(const ojson& obj, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find_if(allowed.begin(), allowed.end(),
                         [&](const char* a) { return key == a; }) == allowed.end())
            throw ConfigError("config: unknown key '" + ctx + key + "'");
    }
}

double get_num(const ojson& obj, const std::string& ctx, const char* key, double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number())
        throw ConfigError("config: '" + ctx + key + "' must be a number");
    return obj[key].get<double>();
}

long long get_int(const ojson& obj, const std::string& ctx, const char* key,
                  long long fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_number_integer())
        throw ConfigError("config: '" + ctx + key + "' must be an integer");
    return obj[key].get<long long>();
}

bool get_bool(const ojson& obj, const std::string& ctx, const char* key, bool fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_boolean())
        throw ConfigError("config: '" + ctx + key + "' must be a boolean");
    return obj[key].get<bool>();
}

std::string get_str(const ojson& obj, const std::string& ctx, const char* key,
                    const std::string& fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj[key].is_string())
        throw ConfigError("config: '" + ctx + key + "' must be a string");
    return obj[key].get<std::string>();
}

std::vector<double> get_schedule(const ojson& obj, const std::string& ctx, const char* key) {
    if (!obj.contains(key) || obj[key].is_null()) return {};
    if (obj[key].is_number()) return {obj[key].get<double>()};
    if (obj[key].is_array()) {
        std::vector<double> out;
        for (const auto& v : obj[key]) {
            if (!v.is_number())
                throw ConfigError("config: '" + ctx + key + "' entries must be numbers");
            out.push_back(v.get<double>());
        }
        return out;
    }
    throw ConfigError("config: '" + ctx + key + "' must be a number, array, or null");
}

std::pair<double, double> get_xy(const ojson& obj, const std::string& ctx, const char* key,
                                 std::pair<double, double> fallback) {
    if (!obj.contains(key) || obj[key].is_null()) return fallback;
    if (!obj[key].is_array() || obj[key].size() != 2 || !obj[key][0].is_number() ||
        !obj[key][1].is_number())
        throw ConfigError("config: '" + ctx + key + "' must be [x, y]");
    return {obj[key][0].get<double>(), obj[key][1].get<double>()};
}

SceneSpec parse_scene(const ojson& obj, const std::string& ctx) {
    check_keys(obj, ctx, {"shape", "amplitude", "reflectors"});
    SceneSpec spec;
    spec.shape = get_str(obj, ctx, "shape", "");
    spec.amplitude = get_num(obj, ctx, "amplitude", 0.005);
    if (obj.contains("reflectors")) {
        if (!spec.shape.empty())
            throw ConfigError("config: '" + ctx + "': give either shape or reflectors");
        if (!obj["reflectors"].is_array())
            throw ConfigError("config: '" + ctx + "reflectors' must be an array");
        for (const auto& r : obj["reflectors"]) {
            const ojson& ro = r;
            check_keys(ro, ctx + "reflectors.", {"x", "y", "re", "im"});
            PointReflector pr;
            pr.x = get_num(ro, ctx, "x", 0.0);
            pr.y = get_num(ro, ctx, "y", 0.0);
            pr.amplitude = Complex{get_num(ro, ctx, "re", spec.amplitude),
                                   get_num(ro, ctx, "im", 0.0)};
            spec.reflectors.push_back(pr);
        }
    } else if (spec.shape.empty()) {
        spec.shape = "point";
    }
    return spec;
}

PowerMode power_mode_from_name(const std::string& name) {
    if (name == "regularized") return PowerMode::Regularized;
    if (name == "total_cap") return PowerMode::TotalCap;
    if (name == "per_look_cap") return PowerMode::PerLookCap;
    throw ConfigError("config: unknown power_mode: " + name);
}

std::string power_mode_name(PowerMode m) {
    switch (m) {
        case PowerMode::Regularized: return "regularized";
        case PowerMode::TotalCap: return "total_cap";
        case PowerMode::PerLookCap: return "per_look_cap";
    }
    return "regularized";
}

ExperimentConfig parse_config_json(const ojson& root) {
    check_keys(root, "", {"radar", "aperture", "image", "scene", "reconstructor", "attack",
                          "snr_db", "operator_mode", "seed", "output_dir"});
    ExperimentConfig cfg;

    if (root.contains("radar")) {
        const ojson& r = root["radar"];
        check_keys(r, "radar.", {"f0", "slope", "fs", "n_samples", "c"});
        cfg.radar.f0 = get_num(r, "radar.", "f0", cfg.radar.f0);
        cfg.radar.slope = get_num(r, "radar.", "slope", cfg.radar.slope);
        cfg.radar.fs = get_num(r, "radar.", "fs", cfg.radar.fs);
        cfg.radar.n_samples =
            static_cast<std::size_t>(get_int(r, "radar.", "n_samples",
                                             static_cast<long long>(cfg.radar.n_samples)));
        cfg.radar.c = get_num(r, "radar.", "c", cfg.radar.c);
        cfg.radar.validate();
    }

    const auto parse_grid_common = [&](const ojson& g, const std::string& ctx, std::size_t& nx,
                                       std::size_t& ny, double& dx, double& dy, double& ox,
                                       double& oy) {
        nx = static_cast<std::size_t>(get_int(g, ctx, "nx", 16));
        ny = static_cast<std::size_t>(get_int(g, ctx, "ny", 16));
        dx = get_num(g, ctx, "dx", 2e-3);
        dy = get_num(g, ctx, "dy", 2e-3);
        const auto [gx, gy] = get_xy(g, ctx, "origin",
                                     {-0.5 * static_cast<double>(nx - 1) * dx,
                                      -0.5 * static_cast<double>(ny - 1) * dy});
        ox = gx;
        oy = gy;
    };

    {
        const ojson g = root.contains("aperture") ? root["aperture"] : ojson::object();
        check_keys(g, "aperture.", {"nx", "ny", "dx", "dy", "origin", "tx_offset", "rx_offset"});
        parse_grid_common(g, "aperture.", cfg.aperture.nx, cfg.aperture.ny, cfg.aperture.dx,
                          cfg.aperture.dy, cfg.aperture.origin_x, cfg.aperture.origin_y);
        std::tie(cfg.aperture.tx_offset_x, cfg.aperture.tx_offset_y) =
            get_xy(g, "aperture.", "tx_offset", {0.0, 0.0});
        std::tie(cfg.aperture.rx_offset_x, cfg.aperture.rx_offset_y) =
            get_xy(g, "aperture.", "rx_offset", {0.0, 0.0});
        cfg.aperture.validate();
    }
    {
        const ojson g = root.contains("image") ? root["image"] : ojson::object();
        check_keys(g, "image.", {"nx", "ny", "dx", "dy", "origin", "z0"});
        parse_grid_common(g, "image.", cfg.image.nx, cfg.image.ny, cfg.image.dx, cfg.image.dy,
                          cfg.image.origin_x, cfg.image.origin_y);
        cfg.image.z0 = get_num(g, "image.", "z0", 0.23);
        cfg.image.validate();
    }

    if (root.contains("scene"))
        cfg.scene = parse_scene(root["scene"], "scene.");
    else
        cfg.scene.shape = "point";

    if (root.contains("reconstructor")) {
        const ojson& r = root["reconstructor"];
        check_keys(r, "reconstructor.",
                   {"variant", "lambda_reg", "mu", "theta", "iters", "evanescent_cutoff"});
        cfg.reconstructor.variant =
            variant_from_name(get_str(r, "reconstructor.", "variant", "bpa"));
        cfg.reconstructor.lambda_reg = get_num(r, "reconstructor.", "lambda_reg", 0.0);
        cfg.reconstructor.mu = get_schedule(r, "reconstructor.", "mu");
        cfg.reconstructor.theta = get_schedule(r, "reconstructor.", "theta");
        cfg.reconstructor.iters =
            static_cast<int>(get_int(r, "reconstructor.", "iters", 50));
        cfg.reconstructor.evanescent_cutoff =
            get_bool(r, "reconstructor.", "evanescent_cutoff", true);
        cfg.reconstructor.validate();
    }

    if (root.contains("attack")) {
        const ojson& a = root["attack"];
        check_keys(a, "attack.",
                   {"strategy", "attacker_position", "dia", "power", "swap_scene"});
        cfg.attack.strategy = get_str(a, "attack.", "strategy", "none");
        if (a.contains("attacker_position")) {
            const ojson& p = a["attacker_position"];
            if (!p.is_array() || p.size() != 3)
                throw ConfigError("config: 'attack.attacker_position' must be [x, y, z]");
            cfg.attack.attacker_position =
                Vec3{p[0].get<double>(), p[1].get<double>(), p[2].get<double>()};
        } else {
            cfg.attack.attacker_position = Vec3{0.05, 0.0, cfg.image.z0};
        }
        if (a.contains("dia")) {
            const ojson& d = a["dia"];
            check_keys(d, "attack.dia.",
                       {"lambda", "step", "iters", "power_mode", "power_cap", "tol"});
            cfg.attack.dia.lambda = get_num(d, "attack.dia.", "lambda", 1e-6);
            if (d.contains("step") && !d["step"].is_null())
                cfg.attack.dia.step = get_num(d, "attack.dia.", "step", 0.0);
            cfg.attack.dia.iters = static_cast<int>(get_int(d, "attack.dia.", "iters", 300));
            cfg.attack.dia.power_mode =
                power_mode_from_name(get_str(d, "attack.dia.", "power_mode", "regularized"));
            cfg.attack.dia.power_cap = get_num(d, "attack.dia.", "power_cap", 0.0);
            cfg.attack.dia.tol = get_num(d, "attack.dia.", "tol", 1e-9);
        }
        cfg.attack.random_power = get_num(a, "attack.", "power", 10.0);
        if (a.contains("swap_scene"))
            cfg.attack.swap_scene = parse_scene(a["swap_scene"], "attack.swap_scene.");
    }

    if (root.contains("snr_db") && !root["snr_db"].is_null())
        cfg.snr_db = get_num(root, "", "snr_db", 0.0);
    cfg.operator_mode = get_str(root, "", "operator_mode", "auto");
    cfg.seed = static_cast<std::uint64_t>(get_int(root, "", "seed", 1));
    cfg.output_dir = get_str(root, "", "output_dir", "out");

    cfg.validate();
    return cfg;
}

ojson scene_to_json(const SceneSpec& s) {
    ojson j;
    if (!s.shape.empty()) {
        j["shape"] = s.shape;
        j["amplitude"] = s.amplitude;
    } else {
        j["amplitude"] = s.amplitude;
        ojson arr = ojson::array();
        for (const auto& r : s.reflectors) {
            ojson ro;
            ro["x"] = r.x;
            ro["y"] = r.y;
            ro["re"] = r.amplitude.real();
            ro["im"] = r.amplitude.imag();
            arr.push_back(ro);
        }
        j["reflectors"] = arr;
    }
    return j;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (operator_mode != "auto" && operator_mode != "matrix_free" &&
        operator_mode != "materialized")
        throw ConfigError("config: operator_mode must be auto, matrix_free, or materialized");
    if (operator_mode == "materialized" &&
        aperture.looks() > PropagationOperator::kMaterializeLimit / image.voxels())
        throw ConfigError("config: instance too large for operator_mode=materialized");
    if (attack.strategy != "none" && attack.strategy != "conceal" &&
        attack.strategy != "swap" && attack.strategy != "random")
        throw ConfigError("config: unknown attack strategy: " + attack.strategy);
    if (attack.strategy == "swap" && !attack.swap_scene)
        throw ConfigError("config: swap strategy requires attack.swap_scene");
    if ((reconstructor.variant == Variant::RMA || reconstructor.variant == Variant::MFA) &&
        !grids_coincident(aperture, image))
        throw ConfigError("config: RMA/MFA require coincident regular grids");
    if (attack.dia.lambda < 0.0) throw ConfigError("config: attack.dia.lambda must be >= 0");
    if (attack.dia.iters < 1) throw ConfigError("config: attack.dia.iters must be >= 1");
    if (attack.dia.power_cap < 0.0)
        throw ConfigError("config: attack.dia.power_cap must be >= 0");
    if (attack.random_power < 0.0) throw ConfigError("config: attack.power must be >= 0");
}

ExperimentConfig parse_config(const std::string& json_text) {
    ojson root;
    try {
        root = ojson::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config: top level must be a JSON object");
    try {
        return parse_config_json(root);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config error: ") + e.what());
    }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string resolved_config_json(const ExperimentConfig& cfg) {
    ojson j;
    j["radar"] = {{"f0", cfg.radar.f0},
                  {"slope", cfg.radar.slope},
                  {"fs", cfg.radar.fs},
                  {"n_samples", cfg.radar.n_samples},
                  {"c", cfg.radar.c}};
    j["aperture"] = {{"nx", cfg.aperture.nx},
                     {"ny", cfg.aperture.ny},
                     {"dx", cfg.aperture.dx},
                     {"dy", cfg.aperture.dy},
                     {"origin", {cfg.aperture.origin_x, cfg.aperture.origin_y}},
                     {"tx_offset", {cfg.aperture.tx_offset_x, cfg.aperture.tx_offset_y}},
                     {"rx_offset", {cfg.aperture.rx_offset_x, cfg.aperture.rx_offset_y}}};
    j["image"] = {{"nx", cfg.image.nx},
                  {"ny", cfg.image.ny},
                  {"dx", cfg.image.dx},
                  {"dy", cfg.image.dy},
                  {"origin", {cfg.image.origin_x, cfg.image.origin_y}},
                  {"z0", cfg.image.z0}};
    j["scene"] = scene_to_json(cfg.scene);
    {
        ojson r;
        r["variant"] = variant_name(cfg.reconstructor.variant);
        r["lambda_reg"] = cfg.reconstructor.lambda_reg;
        r["mu"] = cfg.reconstructor.mu.empty() ? ojson() : ojson(cfg.reconstructor.mu);
        r["theta"] = cfg.reconstructor.theta.empty() ? ojson() : ojson(cfg.reconstructor.theta);
        r["iters"] = cfg.reconstructor.iters;
        r["evanescent_cutoff"] = cfg.reconstructor.evanescent_cutoff;
        j["reconstructor"] = r;
    }
    {
        ojson a;
        a["strategy"] = cfg.attack.strategy;
        a["attacker_position"] = {cfg.attack.attacker_position.x,
                                  cfg.attack.attacker_position.y,
                                  cfg.attack.attacker_position.z};
        ojson d;
        d["lambda"] = cfg.attack.dia.lambda;
        d["step"] = cfg.attack.dia.step ? ojson(*cfg.attack.dia.step) : ojson();
        d["iters"] = cfg.attack.dia.iters;
        d["power_mode"] = power_mode_name(cfg.attack.dia.power_mode);
        d["power_cap"] = cfg.attack.dia.power_cap;
        d["tol"] = cfg.attack.dia.tol;
        a["dia"] = d;
        a["power"] = cfg.attack.random_power;
        if (cfg.attack.swap_scene) a["swap_scene"] = scene_to_json(*cfg.attack.swap_scene);
        j["attack"] = a;
    }
    j["snr_db"] = cfg.snr_db ? ojson(*cfg.snr_db) : ojson();
    j["operator_mode"] = cfg.operator_mode;
    j["seed"] = cfg.seed;
    j["output_dir"] = cfg.output_dir;
    return j.dump(2) + "\n";
}

// ---- experiment runner -----------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();

    const std::size_t entries = cfg.aperture.looks() * cfg.image.voxels();
    const bool materialize =
        cfg.operator_mode == "materialized" ||
        (cfg.operator_mode == "auto" && entries <= PropagationOperator::kMaterializeLimit);
    PropagationOperator H(cfg.radar, cfg.aperture, cfg.image, materialize);

    Rng noise_rng(cfg.seed);
    const Scene scene = build_scene(cfg.scene, cfg.image);
    const MeasurementVector y_clean = synthesize_measurements(H, scene, cfg.snr_db, noise_rng);

    const Reconstruction clean = reconstruct(cfg.reconstructor, H, y_clean);

    ExperimentResult result;
    result.strategy = cfg.attack.strategy;
    result.clean = clean.image;

    const InjectionOperator D =
        InjectionOperator::make(cfg.radar, cfg.aperture, cfg.attack.attacker_position);
    DIAConfig dia;
    dia.lambda = cfg.attack.dia.lambda;
    dia.step = cfg.attack.dia.step;
    dia.iters = cfg.attack.dia.iters;
    dia.power_mode = cfg.attack.dia.power_mode;
    dia.power_cap = cfg.attack.dia.power_cap;
    dia.tol = cfg.attack.dia.tol;
    dia.seed = cfg.seed;

    if (cfg.attack.strategy == "none") {
        result.target = clean.image;
        result.adv = clean.image;
        result.w.assign(H.looks(), Complex{});
        result.metrics = compute_report(result.clean, result.adv, result.target, 0.0, false);
    } else if (cfg.attack.strategy == "conceal") {
        AttackResult atk = strategy_conceal(dia, cfg.reconstructor, H, y_clean, D);
        result.target = ReflectivityImage(H.image());
        result.adv = std::move(atk.adv_image);
        result.w = std::move(atk.w);
        result.metrics =
            compute_report(result.clean, result.adv, result.target, atk.power_ratio, false);
    } else if (cfg.attack.strategy == "swap") {
        const Scene swap = build_scene(*cfg.attack.swap_scene, cfg.image);
        AttackResult atk = strategy_swap(dia, cfg.reconstructor, H, y_clean, D, scene, swap);
        Rng target_rng(cfg.seed ^ 0x5AAFull);
        const MeasurementVector y_swap =
            synthesize_measurements(H, swap, std::nullopt, target_rng);
        result.target = reconstruct(cfg.reconstructor, H, y_swap).image;
        result.adv = std::move(atk.adv_image);
        result.w = std::move(atk.w);
        result.metrics =
            compute_report(result.clean, result.adv, result.target, atk.power_ratio, true);
    } else {  // random
        Rng attack_rng(cfg.seed ^ 0xA77Aull);
        AttackResult atk = strategy_random(cfg.attack.random_power, cfg.reconstructor, H,
                                           y_clean, D, attack_rng);
        result.target = ReflectivityImage(H.image());
        result.adv = std::move(atk.adv_image);
        result.w = std::move(atk.w);
        result.metrics =
            compute_report(result.clean, result.adv, result.target, atk.power_ratio, false);
    }
    return result;
}

namespace {

constexpr double kPsnrSentinel = std::numeric_limits<double>::max();

void put_psnr(ojson& j, const char* key_db, const char* key_inf, double value) {
    const bool inf = std::isinf(value);
    j[key_db] = inf ? kPsnrSentinel : value;
    j[key_inf] = inf;
}

}  // namespace

std::string metrics_json(const ExperimentResult& result) {
    const MetricsReport& m = result.metrics;
    ojson j;
    j["schema"] = "mmwsar-metrics-v1";
    j["strategy"] = result.strategy;
    put_psnr(j, "psnr_ac_db", "psnr_ac_infinite", m.psnr_ac);
    j["ssim_ac"] = m.ssim_ac;
    put_psnr(j, "psnr_at_db", "psnr_at_infinite", m.psnr_at);
    j["ssim_at"] = m.ssim_at;
    j["power_ratio"] = m.power_ratio;
    if (m.roi) {
        j["roi"] = {{"ix0", m.roi->ix0}, {"iy0", m.roi->iy0}, {"nx", m.roi->nx},
                    {"ny", m.roi->ny}};
        ojson r;
        put_psnr(r, "psnr_ac_db", "psnr_ac_infinite", m.roi_psnr_ac);
        r["ssim_ac"] = m.roi_ssim_ac;
        put_psnr(r, "psnr_at_db", "psnr_at_infinite", m.roi_psnr_at);
        r["ssim_at"] = m.roi_ssim_at;
        j["roi_metrics"] = r;
    } else {
        j["roi"] = nullptr;
        j["roi_metrics"] = nullptr;
    }
    return j.dump(2) + "\n";
}

// ---- file formats ----------------------------------------------------------

void write_pgm16(const std::filesystem::path& path, const ReflectivityImage& img) {
    const std::vector<double> mag = to_magnitude(img);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << "P5\n" << img.grid.nx << " " << img.grid.ny << "\n65535\n";
    for (double m : mag) {
        const auto v = static_cast<std::uint16_t>(std::lround(std::clamp(m, 0.0, 1.0) * 65535.0));
        const unsigned char bytes[2] = {static_cast<unsigned char>(v >> 8),
                                        static_cast<unsigned char>(v & 0xFF)};
        out.write(reinterpret_cast<const char*>(bytes), 2);
    }
}

void write_mmwimg(const std::filesystem::path& path, const ReflectivityImage& img) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    unsigned char header[64] = {};
    std::memcpy(header, "MMWIMG1\0", 8);
    const auto nvx = static_cast<std::uint32_t>(img.grid.nx);
    const auto nvy = static_cast<std::uint32_t>(img.grid.ny);
    std::memcpy(header + 8, &nvx, 4);
    std::memcpy(header + 12, &nvy, 4);
    std::memcpy(header + 16, &img.grid.dx, 8);
    std::memcpy(header + 24, &img.grid.dy, 8);
    std::memcpy(header + 32, &img.grid.z0, 8);
    out.write(reinterpret_cast<const char*>(header), 64);
    for (const auto& v : img.values) {
        const double re = v.real();
        const double im = v.imag();
        out.write(reinterpret_cast<const char*>(&re), 8);
        out.write(reinterpret_cast<const char*>(&im), 8);
    }
}

ReflectivityImage read_mmwimg(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    unsigned char header[64];
    in.read(reinterpret_cast<char*>(header), 64);
    if (!in || std::memcmp(header, "MMWIMG1\0", 8) != 0)
        throw Error("not an MMWIMG1 file: " + path.string());
    std::uint32_t nvx = 0, nvy = 0;
    std::memcpy(&nvx, header + 8, 4);
    std::memcpy(&nvy, header + 12, 4);
    ImageGrid grid;
    grid.nx = nvx;
    grid.ny = nvy;
    std::memcpy(&grid.dx, header + 16, 8);
    std::memcpy(&grid.dy, header + 24, 8);
    std::memcpy(&grid.z0, header + 32, 8);
    ReflectivityImage img(grid);
    for (auto& v : img.values) {
        double re = 0.0, im = 0.0;
        in.read(reinterpret_cast<char*>(&re), 8);
        in.read(reinterpret_cast<char*>(&im), 8);
        v = Complex{re, im};
    }
    if (!in) throw Error("truncated MMWIMG1 file: " + path.string());
    return img;
}

std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot hash " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int md_len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &md_len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256 failed for " + path.string());
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * md_len);
    for (unsigned int i = 0; i < md_len; ++i) {
        out.push_back(hex[md[i] >> 4]);
        out.push_back(hex[md[i] & 0xF]);
    }
    return out;
}

ExperimentResult run_experiment_to_dir(const ExperimentConfig& cfg,
                                       const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    ExperimentResult result = run_experiment(cfg);

    write_pgm16(out_dir / "clean.pgm", result.clean);
    write_mmwimg(out_dir / "clean.cimg", result.clean);
    write_pgm16(out_dir / "target.pgm", result.target);
    write_mmwimg(out_dir / "target.cimg", result.target);
    write_pgm16(out_dir / "adv.pgm", result.adv);
    write_mmwimg(out_dir / "adv.cimg", result.adv);

    {
        ojson w;
        w["looks"] = result.w.size();
        std::vector<double> re(result.w.size()), im(result.w.size());
        for (std::size_t i = 0; i < result.w.size(); ++i) {
            re[i] = result.w[i].real();
            im[i] = result.w[i].imag();
        }
        w["re"] = re;
        w["im"] = im;
        std::ofstream out(out_dir / "weights.json");
        out << w.dump(2) << "\n";
    }
    {
        std::ofstream out(out_dir / "metrics.json", std::ios::binary);
        out << metrics_json(result);
    }
    {
        std::ofstream out(out_dir / "resolved_config.json", std::ios::binary);
        out << resolved_config_json(cfg);
    }
    {
        ojson manifest;
        ojson files = ojson::array();
        std::vector<std::string> names = {"adv.cimg",    "adv.pgm",      "clean.cimg",
                                          "clean.pgm",   "metrics.json", "resolved_config.json",
                                          "target.cimg", "target.pgm",   "weights.json"};
        for (const auto& name : names) {
            const auto p = out_dir / name;
            ojson f;
            f["file"] = name;
            f["sha256"] = sha256_file(p);
            f["bytes"] = std::filesystem::file_size(p);
            files.push_back(f);
        }
        manifest["artifacts"] = files;
        std::ofstream out(out_dir / "manifest.json", std::ios::binary);
        out << manifest.dump(2) << "\n";
    }
    return result;
}

// ---- sweeps ----------------------------------------------------------------

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void apply_override(ojson& root, const std::string& dotted, const ojson& value) {
    ojson* node = &root;
    std::size_t start = 0;
    std::vector<std::string> parts;
    while (true) {
        const std::size_t dot = dotted.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(dotted.substr(start));
            break;
        }
        parts.push_back(dotted.substr(start, dot - start));
        start = dot + 1;
    }
    for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
        if (!node->contains(parts[i]) || !(*node)[parts[i]].is_object())
            (*node)[parts[i]] = ojson::object();
        node = &(*node)[parts[i]];
    }
    if (value.is_null())
        node->erase(parts.back());
    else
        (*node)[parts.back()] = value;
}

struct Accumulator {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    double mean() const {
        if (values.empty()) return 0.0;
        double s = 0.0;
        for (double v : values) s += v;
        return s / static_cast<double>(values.size());
    }
    double stddev() const {
        if (values.empty()) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size()));
    }
};

}  // namespace

std::vector<SweepCellRow> run_sweep(const std::string& base_config_json,
                                    const std::string& grid_json,
                                    const std::filesystem::path& out_dir, unsigned jobs) {
    ojson base;
    ojson grid_root;
    try {
        base = ojson::parse(base_config_json);
        grid_root = ojson::parse(grid_json);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("sweep parse error: ") + e.what());
    }
    check_keys(grid_root, "sweep.", {"grid", "seeds"});
    if (!grid_root.contains("grid") || !grid_root["grid"].is_object() ||
        grid_root["grid"].empty())
        throw ConfigError("sweep: 'grid' must be a non-empty object of parameter lists");

    std::vector<std::string> param_names;
    std::vector<std::vector<ojson>> param_values;
    for (const auto& [key, vals] : grid_root["grid"].items()) {
        if (!vals.is_array() || vals.empty())
            throw ConfigError("sweep: grid entry '" + key + "' must be a non-empty array");
        param_names.push_back(key);
        param_values.emplace_back(vals.begin(), vals.end());
    }

    std::vector<std::uint64_t> seeds;
    if (grid_root.contains("seeds")) {
        if (!grid_root["seeds"].is_array() || grid_root["seeds"].empty())
            throw ConfigError("sweep: 'seeds' must be a non-empty array");
        for (const auto& s : grid_root["seeds"])
            seeds.push_back(s.get<std::uint64_t>());
    } else {
        seeds.push_back(base.contains("seed") ? base["seed"].get<std::uint64_t>() : 1);
    }

    std::size_t n_cells = 1;
    for (const auto& v : param_values) n_cells *= v.size();

    std::filesystem::create_directories(out_dir);
    std::vector<SweepCellRow> rows(n_cells);

    const auto run_cell = [&](std::size_t cell) {
        // decode the cell's parameter indices, first parameter outermost
        std::size_t rem = cell;
        std::vector<std::size_t> idx(param_names.size());
        for (std::size_t p = param_names.size(); p-- > 0;) {
            idx[p] = rem % param_values[p].size();
            rem /= param_values[p].size();
        }

        ojson cell_json = base;
        SweepCellRow row;
        row.cell = cell;
        for (std::size_t p = 0; p < param_names.size(); ++p) {
            apply_override(cell_json, param_names[p], param_values[p][idx[p]]);
            row.params.emplace_back(param_names[p], param_values[p][idx[p]].dump());
        }

        char name[32];
        std::snprintf(name, sizeof(name), "cell_%04zu", cell);
        const auto cell_dir = out_dir / name;
        std::filesystem::create_directories(cell_dir);

        Accumulator psnr_ac, ssim_ac, psnr_at, ssim_at, power;
        double psnr_ac_inf = 0.0, psnr_at_inf = 0.0;
        for (const std::uint64_t seed : seeds) {
            ojson with_seed = cell_json;
            with_seed["seed"] = seed;
            const ExperimentConfig cfg = parse_config(with_seed.dump());
            const ExperimentResult res = run_experiment(cfg);
            {
                std::ofstream out(cell_dir / ("metrics_seed" + std::to_string(seed) + ".json"),
                                  std::ios::binary);
                out << metrics_json(res);
            }
            if (std::isinf(res.metrics.psnr_ac))
                psnr_ac_inf += 1.0;
            else
                psnr_ac.add(res.metrics.psnr_ac);
            if (std::isinf(res.metrics.psnr_at))
                psnr_at_inf += 1.0;
            else
                psnr_at.add(res.metrics.psnr_at);
            ssim_ac.add(res.metrics.ssim_ac);
            ssim_at.add(res.metrics.ssim_at);
            power.add(res.metrics.power_ratio);
        }
        {
            const ExperimentConfig cfg = parse_config(cell_json.dump());
            std::ofstream out(cell_dir / "resolved_config.json", std::ios::binary);
            out << resolved_config_json(cfg);
        }

        row.n_seeds = seeds.size();
        row.stats["psnr_ac_mean"] = psnr_ac.mean();
        row.stats["psnr_ac_std"] = psnr_ac.stddev();
        row.stats["psnr_ac_inf_count"] = psnr_ac_inf;
        row.stats["ssim_ac_mean"] = ssim_ac.mean();
        row.stats["ssim_ac_std"] = ssim_ac.stddev();
        row.stats["psnr_at_mean"] = psnr_at.mean();
        row.stats["psnr_at_std"] = psnr_at.stddev();
        row.stats["psnr_at_inf_count"] = psnr_at_inf;
        row.stats["ssim_at_mean"] = ssim_at.mean();
        row.stats["ssim_at_std"] = ssim_at.stddev();
        row.stats["power_ratio_mean"] = power.mean();
        row.stats["power_ratio_std"] = power.stddev();
        rows[cell] = std::move(row);
    };

    const unsigned workers = std::max(1u, jobs);
    if (workers == 1 || n_cells <= 1) {
        for (std::size_t c = 0; c < n_cells; ++c) run_cell(c);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::thread> pool;
        const unsigned n_threads = std::min<unsigned>(workers, static_cast<unsigned>(n_cells));
        for (unsigned t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                while (true) {
                    const std::size_t c = next.fetch_add(1);
                    if (c >= n_cells) break;
                    run_cell(c);
                }
            });
        for (auto& t : pool) t.join();
    }

    std::ofstream csv(out_dir / "sweep.csv", std::ios::binary);
    csv << sweep_csv(rows);
    return rows;
}

std::string sweep_csv(const std::vector<SweepCellRow>& rows) {
    static const char* stat_cols[] = {
        "psnr_ac_mean", "psnr_ac_std", "psnr_ac_inf_count", "ssim_ac_mean", "ssim_ac_std",
        "psnr_at_mean", "psnr_at_std", "psnr_at_inf_count", "ssim_at_mean", "ssim_at_std",
        "power_ratio_mean", "power_ratio_std"};
    std::string out = "cell";
    if (!rows.empty()) {
        for (const auto& [name, _] : rows.front().params) out += "," + name;
    }
    out += ",n_seeds";
    for (const char* c : stat_cols) out += std::string(",") + c;
    out += "\n";
    for (const auto& row : rows) {
        out += std::to_string(row.cell);
        for (const auto& [_, value] : row.params) out += "," + value;
        out += "," + std::to_string(row.n_seeds);
        for (const char* c : stat_cols) out += "," + format_double(row.stats.at(c));
        out += "\n";
    }
    return out;
}

}  // namespace mmwsar
