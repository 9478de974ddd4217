#include "wqed/spectra.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "wqed/dynamics.hpp"
#include "wqed/fft.hpp"
#include "wqed/parallel.hpp"
#include "wqed/units.hpp"

namespace wqed {

Spectrum trace_spectrum(std::span<const std::complex<double>> samples, double dt,
                        int zero_pad_factor, Window window)
{
    if (samples.empty())
        throw std::invalid_argument("cannot take the spectrum of an empty trace");
    if (zero_pad_factor < 1)
        throw std::invalid_argument("zero_pad_factor must be at least 1");
    if (!(dt > 0.0))
        throw std::invalid_argument("sample step must be positive");

    const std::size_t n = samples.size();
    std::vector<std::complex<double>> x(samples.begin(), samples.end());
    if (window == Window::Hann && n > 1) {
        for (std::size_t k = 0; k < n; ++k)
            x[k] *= 0.5 * (1.0 - std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(n - 1)));
    }
    const std::size_t nfft = n * static_cast<std::size_t>(zero_pad_factor);
    const auto bins = transform_positive(x, nfft);
    const auto axis = centered_axis(nfft, dt);

    Spectrum s;
    s.freq_mhz.resize(nfft);
    s.magnitudes.resize(nfft);
    for (std::size_t i = 0; i < nfft; ++i) {
        // dt in ns, so cycles/ns ×1e3 gives MHz.
        s.freq_mhz[i] = axis.frequency[i] * 1.0e3;
        s.magnitudes[i] = std::abs(bins[axis.order[i]]) * dt;
    }
    s.resolution_mhz = 1.0e3 / (static_cast<double>(n) * dt);
    s.bin_mhz = 1.0e3 / (static_cast<double>(nfft) * dt);
    return s;
}

Spectrum trace_spectrum(const FieldTrace& trace, int zero_pad_factor, Window window)
{
    return trace_spectrum(trace.samples, trace.dt, zero_pad_factor, window);
}

Spectrum band_limit(const Spectrum& spectrum, double limit_mhz)
{
    Spectrum out;
    out.resolution_mhz = spectrum.resolution_mhz;
    out.bin_mhz = spectrum.bin_mhz;
    for (std::size_t i = 0; i < spectrum.size(); ++i) {
        if (std::abs(spectrum.freq_mhz[i]) <= limit_mhz) {
            out.freq_mhz.push_back(spectrum.freq_mhz[i]);
            out.magnitudes.push_back(spectrum.magnitudes[i]);
        }
    }
    return out;
}

std::vector<Peak> find_peaks(const Spectrum& spectrum, std::size_t expected_count,
                             double rel_threshold)
{
    if (expected_count < 1)
        throw std::invalid_argument("expected_count must be at least 1");
    const auto& m = spectrum.magnitudes;
    std::vector<Peak> peaks;
    if (m.size() < 3)
        return peaks;
    const double global = *std::max_element(m.begin(), m.end());
    if (!(global > 0.0))
        return peaks;
    const double floor = rel_threshold * global;

    for (std::size_t i = 1; i + 1 < m.size(); ++i) {
        if (!(m[i] > m[i - 1] && m[i] >= m[i + 1] && m[i] > floor))
            continue;
        const double a = m[i - 1];
        const double b = m[i];
        const double c = m[i + 1];
        const double denom = a - 2.0 * b + c;
        double offset = 0.0;
        if (denom < 0.0)
            offset = std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
        const double step = spectrum.freq_mhz[i + 1] - spectrum.freq_mhz[i];
        peaks.push_back({spectrum.freq_mhz[i] + offset * step, b - 0.25 * (a - c) * offset});
    }
    std::stable_sort(peaks.begin(), peaks.end(),
                     [](const Peak& x, const Peak& y) { return x.magnitude > y.magnitude; });
    if (peaks.size() > expected_count)
        peaks.resize(expected_count);
    return peaks;
}

FieldTrace simulate_radiation(const ModelParams& params, const PulseEnvelope& envelope,
                              double t_end, double v0)
{
    const auto trace = integrate(params, envelope, t_end);
    const auto alpha = drive_amplitude(params, envelope, trace);
    const auto out = output_field(alpha, trace, params.gamma1, params.field_phase, v0);
    return radiation_trace(out, alpha, v0);
}

Spectrum radiation_spectrum(const FieldTrace& radiation, const PulseEnvelope& envelope,
                            const ScanOptions& options)
{
    std::span<const std::complex<double>> samples = radiation.samples;
    if (options.cut_at_pulse_end) {
        const auto keep = std::min<std::size_t>(
            samples.size(),
            static_cast<std::size_t>(std::floor((envelope.duration() - radiation.t0) / radiation.dt + 1e-9)) + 1);
        samples = samples.first(keep);
    }
    return trace_spectrum(samples, radiation.dt, options.zero_pad, options.window);
}

ScanResult detuning_scan(const ModelParams& params, const PulseEnvelope& envelope,
                         std::span<const double> detuning_mhz, const ScanOptions& options)
{
    if (detuning_mhz.empty())
        throw std::invalid_argument("detuning grid is empty");
    ScanResult result;
    result.detuning_mhz.assign(detuning_mhz.begin(), detuning_mhz.end());
    result.radiation.resize(detuning_mhz.size());
    result.spectra.resize(detuning_mhz.size());

    parallel_for(
        detuning_mhz.size(),
        [&](std::size_t i) {
            auto p = params;
            p.detuning = mhz_to_angular(detuning_mhz[i]);
            try {
                result.radiation[i] = simulate_radiation(p, envelope, options.t_end, options.v0);
                result.spectra[i] = radiation_spectrum(result.radiation[i], envelope, options);
            } catch (const std::invalid_argument& e) {
                std::ostringstream msg;
                msg << "detuning " << detuning_mhz[i] << " MHz: " << e.what();
                throw std::invalid_argument(msg.str());
            }
        },
        options.threads);
    return result;
}

} // namespace wqed
