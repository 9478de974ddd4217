#include "wqed/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "wqed/io.hpp"

namespace wqed {

namespace {

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b])))
        ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1])))
        --e;
    return s.substr(b, e - b);
}

} // namespace

KeyValueConfig KeyValueConfig::parse(const std::string& text, const std::string& origin)
{
    KeyValueConfig cfg;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            eq = line.find(':');
        if (eq == std::string::npos)
            throw ConfigError("", origin + ":" + std::to_string(lineno) + ": expected key = value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("", origin + ":" + std::to_string(lineno) + ": empty key");
        cfg.values_[key] = value;
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("", "cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const
{
    auto it = values_.find(key);
    if (it == values_.end())
        return std::nullopt;
    return it->second;
}

double parse_double(const std::string& key, const std::string& text)
{
    double value = 0.0;
    const auto* first = text.data();
    const auto* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw ConfigError(key, "not a number: '" + text + "'");
    return value;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const
{
    auto v = get(key);
    return v ? parse_double(key, *v) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const
{
    const auto v = get(key);
    if (!v)
        return fallback;
    if (*v == "true" || *v == "yes" || *v == "on" || *v == "1")
        return true;
    if (*v == "false" || *v == "no" || *v == "off" || *v == "0")
        return false;
    throw ConfigError(key, "expected a boolean, got '" + *v + "'");
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const
{
    auto v = get(key);
    if (!v)
        return fallback;
    // Accept 17e6 style integers as well.
    const double d = parse_double(key, *v);
    if (d != std::floor(d) || std::abs(d) > 9.0e18)
        throw ConfigError(key, "not an integer: '" + *v + "'");
    return static_cast<long long>(d);
}

std::optional<std::pair<double, double>> KeyValueConfig::get_range(const std::string& key) const
{
    auto v = get(key);
    if (!v)
        return std::nullopt;
    auto comma = v->find_first_of(",:");
    if (comma == std::string::npos)
        throw ConfigError(key, "expected 'lo,hi'");
    double lo = parse_double(key, trim(v->substr(0, comma)));
    double hi = parse_double(key, trim(v->substr(comma + 1)));
    if (!(lo <= hi))
        throw ConfigError(key, "range lower bound exceeds upper bound");
    return std::pair{lo, hi};
}

void KeyValueConfig::merge(const KeyValueConfig& other)
{
    for (const auto& [k, v] : other.values_)
        values_[k] = v;
}

FieldPhase parse_field_phase(const std::string& text)
{
    auto t = trim(text);
    if (t == "pi/2" || t == "PI/2" || t == "half_pi")
        return FieldPhase::HalfPi;
    if (t == "0")
        return FieldPhase::Zero;
    const double v = parse_double("field_phase", t);
    if (std::abs(v) < 1e-9)
        return FieldPhase::Zero;
    if (std::abs(v - 0.5 * std::numbers::pi) < 1e-6)
        return FieldPhase::HalfPi;
    throw ConfigError("field_phase", "must be 0 or pi/2");
}

std::string to_string(FieldPhase phase)
{
    return phase == FieldPhase::HalfPi ? "pi/2" : "0";
}

ModelParams SimulationConfig::model() const
{
    auto p = ModelParams::from_mhz(omega_r_mhz, gamma1_mhz, gamma_phi_mhz, detuning_mhz, field_phase);
    p.qubit_frequency_ghz = qubit_frequency_ghz;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("", e.what());
    }
    return p;
}

PulseEnvelope SimulationConfig::envelope() const
{
    try {
        return cosine_taper(duration_ns, taper_fraction, dt_ns);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("duration_ns/taper_fraction/dt_ns", e.what());
    }
}

double SimulationConfig::t_end() const
{
    const double t = t_end_ns.value_or(2.5 * duration_ns);
    if (t < duration_ns)
        throw ConfigError("t_end_ns", "must not be shorter than duration_ns");
    return t;
}

void SimulationConfig::apply(const KeyValueConfig& c)
{
    omega_r_mhz = c.get_double("omega_r_mhz", omega_r_mhz);
    gamma1_mhz = c.get_double("gamma1_mhz", gamma1_mhz);
    gamma_phi_mhz = c.get_double("gamma_phi_mhz", gamma_phi_mhz);
    detuning_mhz = c.get_double("detuning_mhz", detuning_mhz);
    qubit_frequency_ghz = c.get_double("qubit_frequency_ghz", qubit_frequency_ghz);
    duration_ns = c.get_double("duration_ns", duration_ns);
    taper_fraction = c.get_double("taper_fraction", taper_fraction);
    dt_ns = c.get_double("dt_ns", dt_ns);
    if (c.contains("t_end_ns"))
        t_end_ns = c.get_double("t_end_ns", 0.0);
    if (auto v = c.get("field_phase"))
        field_phase = parse_field_phase(*v);
}

KeyValueConfig SimulationConfig::to_config() const
{
    KeyValueConfig c;
    c.set("omega_r_mhz", format_double(omega_r_mhz));
    c.set("gamma1_mhz", format_double(gamma1_mhz));
    c.set("gamma_phi_mhz", format_double(gamma_phi_mhz));
    c.set("detuning_mhz", format_double(detuning_mhz));
    c.set("qubit_frequency_ghz", format_double(qubit_frequency_ghz));
    c.set("duration_ns", format_double(duration_ns));
    c.set("taper_fraction", format_double(taper_fraction));
    c.set("dt_ns", format_double(dt_ns));
    c.set("t_end_ns", format_double(t_end()));
    c.set("field_phase", to_string(field_phase));
    return c;
}

} // namespace wqed
