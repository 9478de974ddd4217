#include "wqed/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "wqed/units.hpp"

namespace wqed {

namespace {

constexpr long long kMaxExplicitShots = 10000;

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

double to_unit_open(std::uint64_t bits)
{
    // 53 random bits mapped into (0, 1).
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double reference_power_of(const FieldTrace& clean, const ChainConfig& config)
{
    if (config.reference_power)
        return *config.reference_power;
    double peak = 0.0;
    for (const auto& s : clean.samples)
        peak = std::max(peak, std::norm(s));
    return peak;
}

std::size_t mirror(long long j, std::size_t n)
{
    if (n == 1)
        return 0;
    const long long period = 2 * (static_cast<long long>(n) - 1);
    j %= period;
    if (j < 0)
        j += period;
    if (j >= static_cast<long long>(n))
        j = period - j;
    return static_cast<std::size_t>(j);
}

} // namespace

void ChainConfig::validate(double dt) const
{
    if (n_avg < 1)
        throw std::invalid_argument("n_avg must be at least 1");
    if (!(lpf_cutoff_mhz > 0.0))
        throw std::invalid_argument("low-pass cutoff must be positive");
    const double nyquist_mhz = 0.5e3 / dt;
    if (lpf_cutoff_mhz >= nyquist_mhz)
        throw std::invalid_argument("low-pass cutoff must be below the grid Nyquist frequency");
    if (if_freq_mhz < 0.0 || 2.0 * if_freq_mhz >= nyquist_mhz)
        throw std::invalid_argument("intermediate frequency must be in [0, Nyquist/2)");
    if (lpf_taps < 1 || lpf_taps % 2 == 0)
        throw std::invalid_argument("low-pass tap count must be odd");
    if (snr_db && !std::isfinite(*snr_db))
        throw std::invalid_argument("snr_db must be finite (leave it unset to disable noise)");
    if (reference_power && !(*reference_power > 0.0))
        throw std::invalid_argument("reference power must be positive");
}

double averaged_noise_variance(const ChainConfig& config, double reference_power)
{
    if (!config.snr_db)
        return 0.0;
    return reference_power * std::pow(10.0, -*config.snr_db / 10.0) /
           static_cast<double>(config.n_avg);
}

std::complex<double> counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index)
{
    const std::uint64_t key = splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ull));
    const std::uint64_t a = splitmix64(key ^ (2 * index));
    const std::uint64_t b = splitmix64(key ^ (2 * index + 1));
    // Box–Muller; each quadrature gets variance 1/2.
    const double r = std::sqrt(-std::log(to_unit_open(a)));
    const double theta = kTwoPi * to_unit_open(b);
    return {r * std::cos(theta), r * std::sin(theta)};
}

FieldTrace add_noise(const FieldTrace& trace, double variance, std::uint64_t seed,
                     std::uint64_t stream)
{
    if (variance < 0.0)
        throw std::invalid_argument("noise variance must be non-negative");
    FieldTrace out = trace;
    if (variance == 0.0)
        return out;
    const double sigma = std::sqrt(variance);
    for (std::size_t i = 0; i < out.size(); ++i)
        out.samples[i] += sigma * counter_normal(seed, stream, i);
    return out;
}

std::vector<double> lowpass_taps(double cutoff_mhz, double dt_ns, int taps)
{
    if (taps < 1 || taps % 2 == 0)
        throw std::invalid_argument("tap count must be odd");
    if (taps == 1)
        return {1.0};
    const double fc = cutoff_mhz * 1.0e-3 * dt_ns; // cycles per sample
    const int half = taps / 2;
    std::vector<double> h(static_cast<std::size_t>(taps));
    double sum = 0.0;
    for (int k = 0; k < taps; ++k) {
        const double m = k - half;
        const double x = 2.0 * fc * m;
        const double sinc = m == 0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
        const double phase = kTwoPi * k / (taps - 1);
        const double blackman = 0.42 - 0.5 * std::cos(phase) + 0.08 * std::cos(2.0 * phase);
        h[static_cast<std::size_t>(k)] = 2.0 * fc * sinc * blackman;
        sum += h[static_cast<std::size_t>(k)];
    }
    for (auto& v : h)
        v /= sum;
    return h;
}

FieldTrace low_pass(const FieldTrace& trace, double cutoff_mhz, int taps)
{
    const auto h = lowpass_taps(cutoff_mhz, trace.dt, taps);
    const long long half = taps / 2;
    const std::size_t n = trace.size();
    FieldTrace out{trace.t0, trace.dt, std::vector<std::complex<double>>(n)};
    if (n == 0)
        return out;
    for (std::size_t i = 0; i < n; ++i) {
        std::complex<double> acc{};
        for (long long k = 0; k < taps; ++k) {
            const long long j = static_cast<long long>(i) + k - half;
            acc += h[static_cast<std::size_t>(k)] * trace.samples[mirror(j, n)];
        }
        out.samples[i] = acc;
    }
    return out;
}

FieldTrace if_roundtrip(const FieldTrace& trace, double if_freq_mhz)
{
    FieldTrace out = trace;
    if (if_freq_mhz == 0.0)
        return out;
    const double w = mhz_to_angular(if_freq_mhz);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double t = trace.time(i);
        const auto lo = std::polar(1.0, w * t);
        const double real_if = (trace.samples[i] * lo).real();
        out.samples[i] = 2.0 * real_if * std::conj(lo);
    }
    return out;
}

FieldTrace apply_chain_noiseless(const FieldTrace& clean, const ChainConfig& config)
{
    if (clean.size() == 0)
        throw std::invalid_argument("measurement chain needs a non-empty trace");
    config.validate(clean.dt);
    return low_pass(if_roundtrip(clean, config.if_freq_mhz), config.lpf_cutoff_mhz, config.lpf_taps);
}

FieldTrace apply_chain(const FieldTrace& clean, const ChainConfig& config, std::uint64_t stream)
{
    if (clean.size() == 0)
        throw std::invalid_argument("measurement chain needs a non-empty trace");
    config.validate(clean.dt);
    const double variance = averaged_noise_variance(config, reference_power_of(clean, config));
    const auto noisy = add_noise(clean, variance, config.rng_seed, stream);
    return low_pass(if_roundtrip(noisy, config.if_freq_mhz), config.lpf_cutoff_mhz, config.lpf_taps);
}

FieldTrace apply_chain_explicit_shots(const FieldTrace& clean, const ChainConfig& config)
{
    if (clean.size() == 0)
        throw std::invalid_argument("measurement chain needs a non-empty trace");
    config.validate(clean.dt);
    if (config.n_avg > kMaxExplicitShots)
        throw std::invalid_argument("explicit shot simulation is limited to 10^4 shots");
    ChainConfig single = config;
    single.n_avg = 1;
    const double variance = averaged_noise_variance(single, reference_power_of(clean, config));
    FieldTrace sum{clean.t0, clean.dt, std::vector<std::complex<double>>(clean.size())};
    for (long long s = 0; s < config.n_avg; ++s) {
        const auto shot = add_noise(clean, variance, config.rng_seed, static_cast<std::uint64_t>(s) + 1);
        for (std::size_t i = 0; i < sum.size(); ++i)
            sum.samples[i] += shot.samples[i];
    }
    for (auto& v : sum.samples)
        v /= static_cast<double>(config.n_avg);
    return low_pass(if_roundtrip(sum, config.if_freq_mhz), config.lpf_cutoff_mhz, config.lpf_taps);
}

} // namespace wqed
