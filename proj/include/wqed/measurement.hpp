#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include "wqed/fields.hpp"

namespace wqed {

/// Heterodyne chain settings.
struct ChainConfig {
    /// Per-shot SNR in dB relative to the reference power. Unset disables noise.
    std::optional<double> snr_db;
    long long n_avg = 1;
    double lpf_cutoff_mhz = 50.0;
    /// Intermediate frequency; 0 skips the up/down conversion.
    double if_freq_mhz = 0.0;
    std::uint64_t rng_seed = 0;
    /// Power the SNR refers to. Defaults to the peak |sample|² of the clean
    /// trace, which for a radiation trace is the peak qubit-emission power.
    std::optional<double> reference_power;
    int lpf_taps = 201;

    void validate(double dt) const;
};

/// Complex noise variance E|n|² left after averaging n_avg shots.
double averaged_noise_variance(const ChainConfig& config, double reference_power);

/// Standard circular complex normal (E|z|² = 1) determined only by
/// (seed, stream, index).
std::complex<double> counter_normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

/// Adds circularly symmetric Gaussian noise of total variance `variance`.
FieldTrace add_noise(const FieldTrace& trace, double variance, std::uint64_t seed,
                     std::uint64_t stream = 0);

/// Unit-DC-gain windowed-sinc (Blackman) low-pass taps.
std::vector<double> lowpass_taps(double cutoff_mhz, double dt_ns, int taps);

/// Linear-phase FIR with mirrored edges; output is aligned with the input.
FieldTrace low_pass(const FieldTrace& trace, double cutoff_mhz, int taps = 201);

/// Up-converts to a real signal at the IF and mixes it back down; leaves the
/// baseband plus an image at −2·IF for the low-pass to remove.
FieldTrace if_roundtrip(const FieldTrace& trace, double if_freq_mhz);

/// noise (averaging folded into one draw) → IF stage → low-pass. Distinct
/// streams give independent noise for the same seed.
FieldTrace apply_chain(const FieldTrace& clean, const ChainConfig& config,
                       std::uint64_t stream = 0);

/// Same chain with every shot drawn and averaged explicitly; n_avg ≤ 10⁴.
FieldTrace apply_chain_explicit_shots(const FieldTrace& clean, const ChainConfig& config);

/// The chain with noise switched off.
FieldTrace apply_chain_noiseless(const FieldTrace& clean, const ChainConfig& config);

} // namespace wqed
