#include "wqed/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "wqed/units.hpp"

namespace wqed {

std::complex<double> phase_factor(FieldPhase phase)
{
    return phase == FieldPhase::HalfPi ? std::complex<double>(0.0, 1.0)
                                       : std::complex<double>(1.0, 0.0);
}

double phase_radians(FieldPhase phase)
{
    return phase == FieldPhase::HalfPi ? 0.5 * std::numbers::pi : 0.0;
}

void ModelParams::validate() const
{
    auto finite = [](double v) { return std::isfinite(v); };
    if (!finite(gamma1) || !finite(gamma_phi) || !finite(detuning) || !finite(rabi_peak) ||
        !finite(qubit_frequency_ghz))
        throw std::invalid_argument("model parameters must be finite");
    if (gamma1 <= 0.0)
        throw std::invalid_argument("gamma1 must be positive");
    if (gamma_phi < 0.0)
        throw std::invalid_argument("gamma_phi must be non-negative");
    if (rabi_peak < 0.0)
        throw std::invalid_argument("rabi amplitude must be non-negative");
}

ModelParams ModelParams::from_mhz(double rabi_mhz, double gamma1_mhz, double gamma_phi_mhz,
                                  double detuning_mhz, FieldPhase phase)
{
    ModelParams p;
    p.rabi_peak = mhz_to_angular(rabi_mhz);
    p.gamma1 = mhz_to_angular(gamma1_mhz);
    p.gamma_phi = mhz_to_angular(gamma_phi_mhz);
    p.detuning = mhz_to_angular(detuning_mhz);
    p.field_phase = phase;
    return p;
}

ModelParams ModelParams::reference()
{
    return from_mhz(19.8, 0.9, 0.6, 0.0);
}

PulseEnvelope::PulseEnvelope(double duration, double taper_fraction, double dt,
                             std::vector<double> samples)
    : duration_(duration), taper_fraction_(taper_fraction), dt_(dt), samples_(std::move(samples))
{
    if (!(duration_ > 0.0) || !(dt_ > 0.0))
        throw std::invalid_argument("envelope duration and dt must be positive");
    if (samples_.empty())
        throw std::invalid_argument("envelope has no samples");
}

double PulseEnvelope::value_at(double t) const
{
    if (t < 0.0 || t > duration_)
        return 0.0;
    const double x = t / dt_;
    const auto last = samples_.size() - 1;
    const auto i = std::min(static_cast<std::size_t>(x), last);
    if (i == last)
        return samples_[last];
    const double frac = x - static_cast<double>(i);
    return samples_[i] + frac * (samples_[i + 1] - samples_[i]);
}

PulseEnvelope cosine_taper(double duration, double taper_fraction, double dt)
{
    if (!(duration > 0.0) || !std::isfinite(duration))
        throw std::invalid_argument("pulse duration must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw std::invalid_argument("envelope dt must be positive");
    if (!(taper_fraction >= 0.0 && taper_fraction < 1.0))
        throw std::invalid_argument("taper_fraction must lie in [0, 1)");
    if (dt > duration / 10.0)
        throw std::invalid_argument("envelope dt must not exceed duration/10");

    const auto n = static_cast<std::size_t>(std::llround(duration / dt)) + 1;
    const double ramp = 0.5 * taper_fraction * duration;
    std::vector<double> samples(n, 1.0);
    if (ramp > 0.0) {
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) * dt;
            const double from_edge = std::min(t, duration - t);
            if (from_edge <= 0.0)
                samples[i] = 0.0;
            else if (from_edge < ramp)
                samples[i] = 0.5 * (1.0 - std::cos(std::numbers::pi * from_edge / ramp));
        }
    }
    return PulseEnvelope(duration, taper_fraction, dt, std::move(samples));
}

double CalibrationParams::v0() const
{
    if (!(hbar_omega > 0.0) || !(z0 > 0.0) || !(gain > 0.0))
        throw std::invalid_argument("calibration constants must be positive");
    return std::sqrt(gain * hbar_omega * z0);
}

double photon_rate_from_rabi(double rabi, double gamma1)
{
    if (!(gamma1 > 0.0))
        throw std::invalid_argument("gamma1 must be positive");
    return rabi * rabi / (2.0 * gamma1);
}

double photon_rate_from_amplitude_ratio(double vp_over_vq, double gamma1)
{
    if (!(vp_over_vq >= 0.0))
        throw std::invalid_argument("amplitude ratio must be non-negative");
    if (!(gamma1 > 0.0))
        throw std::invalid_argument("gamma1 must be positive");
    return gamma1 / 8.0 * vp_over_vq * vp_over_vq;
}

double drive_amplitude_from_rabi(double rabi, double gamma1)
{
    if (!(gamma1 > 0.0))
        throw std::invalid_argument("gamma1 must be positive");
    return rabi / std::sqrt(2.0 * gamma1);
}

double kappa_magnitude(double hbar_omega_q, double z0, double gamma1)
{
    if (!(hbar_omega_q > 0.0) || !(z0 > 0.0) || !(gamma1 > 0.0))
        throw std::invalid_argument("kappa inputs must be positive");
    return std::sqrt(hbar_omega_q * z0 * gamma1 / 2.0);
}

} // namespace wqed
