#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>

#include "wqed/core_model.hpp"

namespace wqed {

/// A configuration problem tied to a key. The CLI maps it to exit code 2.
class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& key, const std::string& what)
        : std::invalid_argument(key.empty() ? what : key + ": " + what), key_(key)
    {
    }
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

/// Flat `key = value` text. Blank lines and `#` comments are ignored.
class KeyValueConfig {
public:
    static KeyValueConfig parse(const std::string& text, const std::string& origin = "<string>");
    static KeyValueConfig load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool contains(const std::string& key) const { return values_.count(key) != 0; }
    std::optional<std::string> get(const std::string& key) const;

    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    /// Accepts true/false, yes/no, on/off and 1/0.
    bool get_bool(const std::string& key, bool fallback) const;
    /// Parses `lo,hi` (or `lo:hi`).
    std::optional<std::pair<double, double>> get_range(const std::string& key) const;

    /// Later entries win.
    void merge(const KeyValueConfig& other);

    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

double parse_double(const std::string& key, const std::string& text);
FieldPhase parse_field_phase(const std::string& text);
std::string to_string(FieldPhase phase);

/// Parameter keys understood everywhere (ordinary frequencies).
struct SimulationConfig {
    double omega_r_mhz = 19.8;
    double gamma1_mhz = 0.9;
    double gamma_phi_mhz = 0.6;
    double detuning_mhz = 0.0;
    double qubit_frequency_ghz = 4.835;
    double duration_ns = 120.0;
    double taper_fraction = 0.02;
    double dt_ns = 0.1;
    /// Simulated span; defaults to 2.5 × duration.
    std::optional<double> t_end_ns;
    FieldPhase field_phase = FieldPhase::HalfPi;

    ModelParams model() const;
    PulseEnvelope envelope() const;
    double t_end() const;

    /// Reads every known key, falling back to the current values.
    void apply(const KeyValueConfig& config);
    KeyValueConfig to_config() const;
};

} // namespace wqed
