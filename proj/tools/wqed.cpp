// Command-line front end. Frequencies on the command line and in config
// files are ordinary frequencies (MHz, GHz), never angular.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wqed/config.hpp"
#include "wqed/core_model.hpp"
#include "wqed/correlations.hpp"
#include "wqed/dressed.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/errors.hpp"
#include "wqed/estimation.hpp"
#include "wqed/fields.hpp"
#include "wqed/io.hpp"
#include "wqed/measurement.hpp"
#include "wqed/parallel.hpp"
#include "wqed/spectra.hpp"
#include "wqed/units.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace wqed;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

const std::vector<std::string> kModelKeys{
    "omega_r_mhz", "gamma1_mhz",  "gamma_phi_mhz", "detuning_mhz", "qubit_frequency_ghz",
    "duration_ns", "taper_fraction", "dt_ns",     "t_end_ns",     "field_phase"};
const std::vector<std::string> kCalibrationKeys{"gain", "hbar_omega", "z0"};
const std::vector<std::string> kChainKeys{"snr_db", "n_avg",           "lpf_mhz",  "if_mhz",
                                          "seed",   "reference_power", "lpf_taps", "explicit_shots"};
const std::vector<std::string> kScanKeys{"detuning_range", "detuning_points", "zero_pad", "window",
                                         "cut_at_pulse_end"};
const std::vector<std::string> kCorrelateKeys{"memory_cap_mb", "steady_window_ns", "f_max_mhz",
                                              "zero_pad",      "apodization_ns",   "ipsd_stride",
                                              "g1_stride",     "g1_matrix"};
const std::vector<std::string> kAuditKeys{"audit_window_ns"};
const std::vector<std::string> kFitKeys{"max_iterations", "fit_model_chain"};
const std::vector<std::string> kCalibrateKeys{"amplitude_ratio", "z0_ohm"};
const std::vector<std::string> kBoundsKeys{"offset_mhz", "omega_r_mhz", "gamma1_mhz", "gamma_phi_mhz"};

// One subcommand's settings: defaults < config file < flags.
struct Command {
    std::string name;
    CLI::App* app = nullptr;
    std::vector<std::string> keys;
    std::map<std::string, std::string> flag_values;
    std::string config_path;
    std::string out_dir = ".";
    unsigned threads = 0;
    bool noise = false;
    bool cut_flag = false;
    bool shots_flag = false;
    // fit only
    std::string data_path;
    std::string init_path;
    std::string bounds_path;
    std::string out_path;

    KeyValueConfig merged;
    std::vector<fs::path> inputs;
    // (name listed in the manifest, path written)
    std::vector<std::pair<std::string, fs::path>> outputs;

    bool has_key(const std::string& k) const
    {
        return std::find(keys.begin(), keys.end(), k) != keys.end();
    }
};

void add_keys(Command& c, const std::vector<std::string>& keys)
{
    for (const auto& k : keys) {
        if (c.has_key(k))
            continue;
        c.keys.push_back(k);
        c.app->add_option("--" + k, c.flag_values[k], "config key " + k);
    }
}

Command* make_command(CLI::App& root, std::vector<std::unique_ptr<Command>>& all, const std::string& name,
                      const std::string& help)
{
    auto cmd = std::make_unique<Command>();
    cmd->name = name;
    cmd->app = root.add_subcommand(name, help);
    cmd->app->add_option("--config", cmd->config_path, "flat key = value configuration file");
    cmd->app->add_option("--out-dir", cmd->out_dir, "directory for outputs and manifest.json");
    cmd->app->add_option("--threads", cmd->threads, "worker threads (default: WQED_THREADS or all cores)");
    add_keys(*cmd, kModelKeys);
    add_keys(*cmd, kCalibrationKeys);
    all.push_back(std::move(cmd));
    return all.back().get();
}

void check_known_keys(const KeyValueConfig& cfg, const Command& c, const std::string& origin)
{
    for (const auto& [k, v] : cfg.entries())
        if (!c.has_key(k))
            throw ConfigError(k, "unknown key in " + origin);
}

void resolve(Command& c)
{
    KeyValueConfig merged;
    if (!c.config_path.empty()) {
        if (!fs::exists(c.config_path))
            throw ConfigError("config", "file not found: " + c.config_path);
        const auto file = KeyValueConfig::load(c.config_path);
        check_known_keys(file, c, c.config_path);
        merged.merge(file);
        c.inputs.emplace_back(c.config_path);
    }
    for (const auto& k : c.keys) {
        const auto* opt = c.app->get_option("--" + k);
        if (opt->count() > 0)
            merged.set(k, c.flag_values[k]);
    }
    if (c.cut_flag)
        merged.set("cut_at_pulse_end", "true");
    if (c.shots_flag)
        merged.set("explicit_shots", "true");
    c.merged = merged;
    if (c.threads > 0)
        set_default_threads(c.threads);
}

SimulationConfig simulation_config(const Command& c)
{
    SimulationConfig s;
    s.apply(c.merged);
    return s;
}

double v0_of(const KeyValueConfig& cfg)
{
    CalibrationParams cal;
    cal.gain = cfg.get_double("gain", cal.gain);
    cal.hbar_omega = cfg.get_double("hbar_omega", cal.hbar_omega);
    cal.z0 = cfg.get_double("z0", cal.z0);
    if (!(cal.gain > 0.0) || !(cal.hbar_omega > 0.0) || !(cal.z0 > 0.0))
        throw ConfigError("gain", "gain, hbar_omega and z0 must be positive");
    return cal.v0();
}

ChainConfig chain_config(const KeyValueConfig& cfg, bool noise)
{
    ChainConfig ch;
    if (noise)
        ch.snr_db = cfg.get_double("snr_db", -40.0);
    ch.n_avg = cfg.get_int("n_avg", 17'000'000);
    if (ch.n_avg < 1)
        throw ConfigError("n_avg", "must be at least 1");
    ch.lpf_cutoff_mhz = cfg.get_double("lpf_mhz", ch.lpf_cutoff_mhz);
    ch.if_freq_mhz = cfg.get_double("if_mhz", ch.if_freq_mhz);
    const auto seed = cfg.get_int("seed", 0);
    if (seed < 0)
        throw ConfigError("seed", "must be non-negative");
    ch.rng_seed = static_cast<std::uint64_t>(seed);
    if (cfg.contains("reference_power"))
        ch.reference_power = cfg.get_double("reference_power", 0.0);
    ch.lpf_taps = static_cast<int>(cfg.get_int("lpf_taps", ch.lpf_taps));
    return ch;
}

template <class Writer>
void write_file(Command& c, const std::string& name, Writer&& writer)
{
    const fs::path path = fs::path(c.out_dir) / name;
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("out-dir", "cannot write " + path.string());
    writer(out);
    out.close();
    if (!out)
        throw std::runtime_error("failed writing " + path.string());
    c.outputs.emplace_back(name, path);
}

void write_json(Command& c, const std::string& name, const json& j)
{
    write_file(c, name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

void check_finite(double v, const std::string& what)
{
    if (!std::isfinite(v))
        throw NumericalError(what + " is not finite");
}

void check_finite(const FieldTrace& t, const std::string& what)
{
    for (const auto& v : t.samples)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw NumericalError(what + " contains non-finite samples");
}

std::vector<double> detuning_grid(const KeyValueConfig& cfg, std::pair<double, double> default_range,
                                  long long default_points)
{
    const auto range = cfg.get_range("detuning_range").value_or(default_range);
    const auto points = cfg.get_int("detuning_points", default_points);
    if (points < 1)
        throw ConfigError("detuning_points", "detuning grid is empty");
    if (points == 1 && range.first != range.second)
        throw ConfigError("detuning_points", "a single point needs lo = hi");
    std::vector<double> grid(static_cast<std::size_t>(points));
    for (long long i = 0; i < points; ++i)
        grid[static_cast<std::size_t>(i)] =
            points == 1 ? range.first
                        : range.first + (range.second - range.first) * static_cast<double>(i) /
                                             static_cast<double>(points - 1);
    return grid;
}

ScanOptions scan_options(const KeyValueConfig& cfg, const SimulationConfig& sim, double v0)
{
    ScanOptions opt;
    opt.t_end = sim.t_end();
    opt.v0 = v0;
    opt.zero_pad = static_cast<int>(cfg.get_int("zero_pad", 4));
    if (opt.zero_pad < 1)
        throw ConfigError("zero_pad", "must be at least 1");
    const auto w = cfg.get("window").value_or("none");
    if (w == "none")
        opt.window = Window::None;
    else if (w == "hann")
        opt.window = Window::Hann;
    else
        throw ConfigError("window", "expected none or hann, got '" + w + "'");
    opt.cut_at_pulse_end = cfg.get_bool("cut_at_pulse_end", false);
    return opt;
}

// ---------------------------------------------------------------------------

void run_simulate(Command& c)
{
    const auto sim = simulation_config(c);
    const auto params = sim.model();
    const auto env = sim.envelope();
    const double v0 = v0_of(c.merged);
    const auto trace = integrate(params, env, sim.t_end());
    const auto alpha = drive_amplitude(params, env, trace);
    const auto field = output_field(alpha, trace, params.gamma1, params.field_phase, v0);
    const auto rad = radiation_trace(field, alpha, v0);
    check_finite(field, "output field");
    write_file(c, "bloch.csv", [&](std::ostream& o) { write_bloch_csv(o, trace); });
    write_file(c, "field.csv", [&](std::ostream& o) { write_field_csv(o, field); });
    write_file(c, "radiation.csv", [&](std::ostream& o) { write_field_csv(o, rad); });
}

void run_scan(Command& c)
{
    const auto sim = simulation_config(c);
    const auto grid = detuning_grid(c.merged, {-60.0, 60.0}, 121);
    const double v0 = v0_of(c.merged);
    auto opt = scan_options(c.merged, sim, v0);
    auto scan = detuning_scan(sim.model(), sim.envelope(), grid, opt);
    if (c.noise) {
        auto ch = chain_config(c.merged, true);
        ch.validate(sim.dt_ns);
        if (!ch.reference_power) {
            double peak = 0.0;
            for (const auto& row : scan.radiation)
                for (const auto& v : row.samples)
                    peak = std::max(peak, std::norm(v));
            ch.reference_power = peak;
        }
        const bool explicit_shots = c.merged.get_bool("explicit_shots", false);
        const auto env = sim.envelope();
        parallel_for(scan.size(), [&](std::size_t k) {
            ChainConfig row = ch;
            if (explicit_shots) {
                row.rng_seed = ch.rng_seed + 1'000'003ull * k;
                scan.radiation[k] = apply_chain_explicit_shots(scan.radiation[k], row);
            } else {
                scan.radiation[k] = apply_chain(scan.radiation[k], row, k);
            }
            scan.spectra[k] = radiation_spectrum(scan.radiation[k], env, opt);
        });
    }
    for (const auto& r : scan.radiation)
        check_finite(r, "radiation trace");
    write_file(c, "scan_time.csv", [&](std::ostream& o) { write_scan_time_csv(o, scan); });
    write_file(c, "scan_spec.csv", [&](std::ostream& o) { write_scan_spectrum_csv(o, scan); });
    write_file(c, "dressed.csv", [&](std::ostream& o) {
        if (sim.omega_r_mhz > 0.0 || std::all_of(grid.begin(), grid.end(), [](double d) { return d != 0.0; }))
            write_dressed_table(o, sim.omega_r_mhz, grid);
        else
            o << "detuning_mhz,omega_mhz,amp_lower,amp_upper\n";
    });
}

void run_correlate(Command& c)
{
    const auto sim = simulation_config(c);
    const auto params = sim.model();
    const auto env = sim.envelope();
    const double v0 = v0_of(c.merged);
    const TimeGrid grid{sim.dt_ns, static_cast<std::size_t>(std::llround(sim.t_end() / sim.dt_ns)) + 1};

    const double cap_mb = c.merged.get_double("memory_cap_mb", 4096.0);
    const double need_mb = static_cast<double>(correlation_memory_bytes(grid.size)) / (1024.0 * 1024.0);
    if (need_mb > cap_mb)
        throw ConfigError("memory_cap_mb", "a " + std::to_string(grid.size) + "-point grid needs " +
                                               std::to_string(static_cast<long long>(std::ceil(need_mb))) +
                                               " MB; raise memory_cap_mb to at least that or coarsen dt_ns");
    if (grid.size > 4000)
        std::cerr << "warning: " << grid.size << "x" << grid.size << " correlation grid (" << need_mb
                  << " MB); this may take a while\n";

    const auto corr = two_time_correlator(params, env, grid);
    const auto g = g1_incoherent(corr, v0, params.gamma1);
    if (!g.values.allFinite())
        throw NumericalError("correlation grid contains non-finite values");

    IpsdOptions opt;
    opt.f_max_mhz = c.merged.get_double("f_max_mhz", opt.f_max_mhz);
    opt.zero_pad = static_cast<int>(c.merged.get_int("zero_pad", opt.zero_pad));
    opt.apodization_ns = c.merged.get_double("apodization_ns", 0.0);
    const auto stride = c.merged.get_int("ipsd_stride", 10);
    const auto g1_stride = c.merged.get_int("g1_stride", 5);
    if (stride < 1 || g1_stride < 1)
        throw ConfigError(stride < 1 ? "ipsd_stride" : "g1_stride", "must be at least 1");
    opt.row_stride = static_cast<std::size_t>(stride);

    write_file(c, "g1.csv", [&](std::ostream& o) {
        write_g1_long_csv(o, g, static_cast<std::size_t>(g1_stride));
    });
    if (c.merged.get_bool("g1_matrix", false))
        write_file(c, "g1_matrix.csv", [&](std::ostream& o) {
            write_g1_matrix_csv(o, g, static_cast<std::size_t>(g1_stride));
        });
    const auto map = ipsd(g, opt);
    write_file(c, "ipsd.csv", [&](std::ostream& o) { write_ipsd_csv(o, map); });
    if (const auto window = c.merged.get_range("steady_window_ns")) {
        IpsdOptions steady = opt;
        steady.row_stride = 1;
        const auto psd = steady_psd(g, window->first, window->second, steady);
        write_file(c, "psd.csv", [&](std::ostream& o) { write_spectrum_csv(o, psd); });
    }
}

void run_audit(Command& c)
{
    const auto sim = simulation_config(c);
    const auto params = sim.model();
    const auto env = sim.envelope();
    if (!(params.rabi_peak > 0.0) && !c.merged.contains("audit_window_ns"))
        throw ConfigError("audit_window_ns", "no Rabi period without drive; give the window explicitly");
    const double pi = std::acos(-1.0);
    std::pair<double, double> window{0.0, params.rabi_peak > 0.0 ? pi / params.rabi_peak : 0.0};
    if (const auto w = c.merged.get_range("audit_window_ns"))
        window = *w;
    if (!(window.first >= 0.0) || !(window.second > window.first))
        throw ConfigError("audit_window_ns", "window must satisfy 0 <= start < end");
    const auto report = energy_audit(params, env, window.first, window.second);
    check_finite(report.deficit, "energy deficit");

    json j = to_json(report);
    if (params.rabi_peak > 0.0) {
        const double ratio = params.gamma1 / params.rabi_peak;
        j["analytic"] = {
            {"half_period_ns", pi / params.rabi_peak},
            {"half_period_deficit", 1.0 - pi * ratio / 4.0},
            {"half_period_reflected", pi * ratio / 4.0},
            {"full_period_deficit", 0.0},
            {"gamma1_over_rabi", ratio},
            {"note", "weak-decay resonant approximation; compare only when gamma1 << rabi and detuning = 0"},
        };
    }
    write_json(c, "energy.json", j);
}

FitBounds bounds_from(const KeyValueConfig& cfg, const ModelParams& guess)
{
    auto b = FitBounds::around(guess, 2.0, 5.0);
    auto rate = [&](const char* key, std::pair<double, double>& slot) {
        if (auto r = cfg.get_range(key)) {
            if (!(r->first > 0.0))
                throw ConfigError(key, "rate bounds must be positive");
            slot = {mhz_to_angular(r->first), mhz_to_angular(r->second)};
        }
    };
    if (auto r = cfg.get_range("offset_mhz"))
        b.offset_mhz = *r;
    rate("omega_r_mhz", b.rabi);
    rate("gamma1_mhz", b.gamma1);
    rate("gamma_phi_mhz", b.gamma_phi);
    return b;
}

json fit_to_json(const FitResult& r)
{
    auto mhz = [](double w) { return angular_to_mhz(w); };
    return {
        {"converged", r.converged},
        {"iterations", r.iterations},
        {"objective", r.objective},
        {"residual_norm", r.residual_norm},
        {"gradient_norm", r.gradient_norm},
        {"parameters",
         {{"qubit_frequency_ghz", r.params.qubit_frequency_ghz},
          {"qubit_offset_mhz", r.qubit_offset_mhz},
          {"omega_r_mhz", mhz(r.params.rabi_peak)},
          {"gamma1_mhz", mhz(r.params.gamma1)},
          {"gamma_phi_mhz", mhz(r.params.gamma_phi)},
          {"field_phase", to_string(r.params.field_phase)}}},
        {"uncertainty",
         {{"qubit_offset_mhz", r.uncertainty.offset_mhz},
          {"omega_r_mhz", mhz(r.uncertainty.rabi)},
          {"gamma1_mhz", mhz(r.uncertainty.gamma1)},
          {"gamma_phi_mhz", mhz(r.uncertainty.gamma_phi)}}},
        {"objective_log", r.log},
    };
}

void run_fit(Command& c)
{
    const auto sim = simulation_config(c);
    const auto env = sim.envelope();
    const double v0 = v0_of(c.merged);

    ScanResult data;
    if (!c.data_path.empty()) {
        if (!fs::exists(c.data_path))
            throw ConfigError("data", "file not found: " + c.data_path);
        data = scan_from_csv(read_csv(fs::path(c.data_path)));
        c.inputs.emplace_back(c.data_path);
    } else {
        // Synthetic fit data: a coarse grid keeps each model evaluation cheap.
        const auto grid = detuning_grid(c.merged, {-30.0, 30.0}, 9);
        std::optional<ChainConfig> chain;
        if (c.noise)
            chain = chain_config(c.merged, true);
        data = synthetic_scan(sim.model(), env, grid, sim.t_end(), chain, v0);
        write_file(c, "fit_data.csv", [&](std::ostream& o) { write_scan_time_csv(o, data); });
    }

    SimulationConfig init = sim;
    if (!c.init_path.empty()) {
        if (!fs::exists(c.init_path))
            throw ConfigError("init", "file not found: " + c.init_path);
        const auto file = KeyValueConfig::load(c.init_path);
        for (const auto& [k, v] : file.entries())
            if (std::find(kModelKeys.begin(), kModelKeys.end(), k) == kModelKeys.end())
                throw ConfigError(k, "unknown key in " + c.init_path);
        init.apply(file);
        c.inputs.emplace_back(c.init_path);
    }
    auto guess = init.model();
    guess.detuning = 0.0;

    KeyValueConfig bounds_cfg;
    if (!c.bounds_path.empty()) {
        if (!fs::exists(c.bounds_path))
            throw ConfigError("bounds", "file not found: " + c.bounds_path);
        bounds_cfg = KeyValueConfig::load(c.bounds_path);
        for (const auto& [k, v] : bounds_cfg.entries())
            if (std::find(kBoundsKeys.begin(), kBoundsKeys.end(), k) == kBoundsKeys.end())
                throw ConfigError(k, "unknown key in " + c.bounds_path);
        c.inputs.emplace_back(c.bounds_path);
    }

    std::optional<ChainConfig> model_chain;
    if (c.merged.get_bool("fit_model_chain", c.noise))
        model_chain = chain_config(c.merged, false);

    FitProblem problem{data, guess, bounds_from(bounds_cfg, guess), {}, env, model_chain};
    problem.v0 = v0;
    problem.max_iterations = static_cast<int>(c.merged.get_int("max_iterations", 2000));
    const auto result = fit(problem);
    check_finite(result.objective, "fit objective");

    if (c.out_path.empty()) {
        write_json(c, "fit.json", fit_to_json(result));
    } else {
        std::ofstream out(c.out_path);
        if (!out)
            throw ConfigError("out", "cannot write " + c.out_path);
        out << fit_to_json(result).dump(2) << '\n';
        out.close();
        c.outputs.emplace_back(c.out_path, fs::path(c.out_path));
    }
    if (!result.converged)
        std::cerr << "warning: fit did not converge after " << result.iterations << " iterations\n";
}

void run_calibrate(Command& c)
{
    const auto sim = simulation_config(c);
    const auto params = sim.model();
    const double nu = photon_rate_from_rabi(params.rabi_peak, params.gamma1);
    const double alpha = drive_amplitude_from_rabi(params.rabi_peak, params.gamma1);
    const double predicted_ratio = 2.0 * std::sqrt(2.0) * alpha / std::sqrt(params.gamma1);

    // Method 1 from a simulated resonant trace: plateau pulse amplitude over
    // the first oscillation amplitude of the qubit radiation.
    auto resonant = params;
    resonant.detuning = 0.0;
    const auto env = sim.envelope();
    const auto trace = integrate(resonant, env, sim.t_end());
    const auto drive = drive_amplitude(resonant, env, trace);
    const auto emitted = emission_field(trace, resonant.gamma1, resonant.field_phase);
    double vp = 0.0;
    for (const auto& a : drive)
        vp = std::max(vp, std::abs(a));
    double vq = 0.0;
    const double first_period = params.rabi_peak > 0.0 ? 2.0 * std::acos(-1.0) / params.rabi_peak : 0.0;
    for (std::size_t i = 0; i < emitted.size() && emitted.time(i) <= first_period; ++i)
        vq = std::max(vq, std::abs(emitted.samples[i]));
    const double measured_ratio = vq > 0.0 ? vp / vq : 0.0;

    json j;
    j["rabi_method"] = {{"photons_per_ns", nu}, {"alpha", alpha}};
    j["amplitude_ratio_method"] = {
        {"predicted_vp_over_vq", predicted_ratio},
        {"simulated_vp_over_vq", measured_ratio},
        {"photons_per_ns_from_simulation", photon_rate_from_amplitude_ratio(measured_ratio, params.gamma1)},
    };
    if (c.merged.contains("amplitude_ratio")) {
        const double r = c.merged.get_double("amplitude_ratio", 0.0);
        j["amplitude_ratio_method"]["given_vp_over_vq"] = r;
        j["amplitude_ratio_method"]["photons_per_ns"] = photon_rate_from_amplitude_ratio(r, params.gamma1);
    }
    const double hbar = 1.054571817e-34;
    const double hbar_omega_q = hbar * kTwoPi * params.qubit_frequency_ghz * 1e9;
    const double z0 = c.merged.get_double("z0_ohm", 50.0);
    j["kappa"] = {
        {"hbar_omega_q_joule", hbar_omega_q},
        {"z0_ohm", z0},
        {"magnitude_volt", kappa_magnitude(hbar_omega_q, z0, params.gamma1 * 1e9)},
        {"phase_rad", phase_radians(params.field_phase)},
    };
    write_json(c, "calibration.json", j);
}

void write_manifest(Command& c, double seconds)
{
    KeyValueConfig resolved = simulation_config(c).to_config();
    resolved.merge(c.merged);
    json params = json::object();
    for (const auto& [k, v] : resolved.entries())
        params[k] = v;
    json inputs = json::object();
    for (const auto& p : c.inputs)
        inputs[p.string()] = sha256_file(p);
    json outputs = json::array();
    for (const auto& [name, path] : c.outputs)
        outputs.push_back({{"file", name}, {"sha256", sha256_file(path)}});
    const json m{
        {"command", c.name},  {"version", WQED_VERSION}, {"parameters", params},
        {"inputs", inputs},   {"outputs", outputs},      {"noise", c.noise},
        {"wall_time_s", seconds},
    };
    std::ofstream out(fs::path(c.out_dir) / "manifest.json");
    out << m.dump(2) << '\n';
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Coherent pulses scattering off a waveguide-coupled two-level atom.\n"
                 "All frequencies are ordinary frequencies in MHz (GHz for the qubit), never angular."};
    app.require_subcommand(1);
    app.set_version_flag("--version", WQED_VERSION);

    std::vector<std::unique_ptr<Command>> commands;
    auto* simulate = make_command(app, commands, "simulate", "Bloch trace, output field and radiation");
    auto* scan = make_command(app, commands, "scan", "radiation traces and spectra versus detuning");
    add_keys(*scan, kScanKeys);
    add_keys(*scan, kChainKeys);
    scan->app->add_flag("--noise", scan->noise, "pass the traces through the measurement chain");
    scan->app->add_flag("--cut-at-pulse-end", scan->cut_flag, "transform only the samples up to the pulse end");
    scan->app->add_flag("--explicit-shots", scan->shots_flag, "draw every shot instead of one folded draw");
    auto* correlate = make_command(app, commands, "correlate", "first-order correlation, IPSD and steady PSD");
    add_keys(*correlate, kCorrelateKeys);
    auto* audit = make_command(app, commands, "audit", "photon bookkeeping over a time window");
    add_keys(*audit, kAuditKeys);
    auto* fitc = make_command(app, commands, "fit", "fit qubit parameters to radiation traces");
    add_keys(*fitc, kScanKeys);
    add_keys(*fitc, kChainKeys);
    add_keys(*fitc, kFitKeys);
    fitc->app->add_option("--data", fitc->data_path, "scan_time.csv to fit; synthetic data when omitted");
    fitc->app->add_option("--init", fitc->init_path, "config file with the initial guess");
    fitc->app->add_option("--bounds", fitc->bounds_path, "config file of lo,hi ranges");
    fitc->app->add_option("--out", fitc->out_path, "result file (default fit.json in --out-dir)");
    fitc->app->add_flag("--noise", fitc->noise, "generate synthetic data through the measurement chain");
    auto* calibrate = make_command(app, commands, "calibrate", "photon-number methods and kappa");
    add_keys(*calibrate, kCalibrateKeys);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    Command* active = nullptr;
    for (auto& c : commands)
        if (c->app->parsed())
            active = c.get();

    const auto start = std::chrono::steady_clock::now();
    try {
        fs::create_directories(active->out_dir);
        resolve(*active);
        if (active == simulate)
            run_simulate(*active);
        else if (active == scan)
            run_scan(*active);
        else if (active == correlate)
            run_correlate(*active);
        else if (active == audit)
            run_audit(*active);
        else if (active == fitc)
            run_fit(*active);
        else if (active == calibrate)
            run_calibrate(*active);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_manifest(*active, secs);
    } catch (const NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const json::exception& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return kExitUsage;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "file error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
    return kExitOk;
}
