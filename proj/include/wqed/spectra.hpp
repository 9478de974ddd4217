#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wqed/core_model.hpp"
#include "wqed/fields.hpp"

namespace wqed {

/// Magnitude spectrum on an ascending frequency axis in MHz relative to the
/// carrier. Positive frequencies lie above the carrier.
struct Spectrum {
    std::vector<double> freq_mhz;
    std::vector<double> magnitudes;
    /// Native resolution 1/T of the transformed record.
    double resolution_mhz = 0.0;
    /// Spacing of the (possibly zero-padded) axis.
    double bin_mhz = 0.0;

    std::size_t size() const { return freq_mhz.size(); }
};

enum class Window { None, Hann };

/// |dt·Σ x(t_k)·w_k·e^{+2πi f t_k}| on a zero-padded grid (no window by default).
Spectrum trace_spectrum(std::span<const std::complex<double>> samples, double dt,
                        int zero_pad_factor = 4, Window window = Window::None);
Spectrum trace_spectrum(const FieldTrace& trace, int zero_pad_factor = 4,
                        Window window = Window::None);

/// Keeps bins with |f| ≤ limit.
Spectrum band_limit(const Spectrum& spectrum, double limit_mhz);

struct Peak {
    double freq_mhz = 0.0;
    double magnitude = 0.0;
};

/// Strict local maxima above rel_threshold·(global max), refined by a
/// three-point parabola, strongest first. Returns at most expected_count
/// peaks; fewer when fewer exist.
std::vector<Peak> find_peaks(const Spectrum& spectrum, std::size_t expected_count,
                             double rel_threshold = 0.05);

struct ScanOptions {
    /// Simulated span per detuning; must cover the pulse.
    double t_end = 0.0;
    int zero_pad = 4;
    Window window = Window::None;
    /// Transform only the samples up to the end of the pulse.
    bool cut_at_pulse_end = false;
    double v0 = 1.0;
    unsigned threads = 0;
};

struct ScanResult {
    std::vector<double> detuning_mhz;
    /// Output minus bare pulse, one per detuning, all on one grid.
    std::vector<FieldTrace> radiation;
    std::vector<Spectrum> spectra;

    std::size_t size() const { return detuning_mhz.size(); }
};

/// Output field minus the bare pulse for one parameter set.
FieldTrace simulate_radiation(const ModelParams& params, const PulseEnvelope& envelope,
                              double t_end, double v0 = 1.0);

/// Spectrum of a radiation trace according to the scan options.
Spectrum radiation_spectrum(const FieldTrace& radiation, const PulseEnvelope& envelope,
                            const ScanOptions& options);

/// One radiation trace and spectrum per detuning (MHz, overriding
/// params.detuning). Rows are independent and computed in parallel;
/// results are in grid order.
ScanResult detuning_scan(const ModelParams& params, const PulseEnvelope& envelope,
                         std::span<const double> detuning_mhz, const ScanOptions& options);

} // namespace wqed
