#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "wqed/core_model.hpp"
#include "wqed/dynamics.hpp"

namespace wqed {

/// Complex output field I + iQ on a uniform grid, in units of V₀·√(photons/ns).
struct FieldTrace {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::complex<double>> samples;

    std::size_t size() const { return samples.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Photon bookkeeping over a time window.
struct EnergyReport {
    double t_start = 0.0;
    double t_end = 0.0;
    /// N: photons carried by the input over the window.
    double input_photons = 0.0;
    /// E_r: photons leaving to the right (transmitted).
    double transmitted_photons = 0.0;
    /// E_l: photons leaving to the left (reflected).
    double reflected_photons = 0.0;
    /// N − E_r
    double deficit = 0.0;
};

/// α(t) = Ω_R(t)/√(2Γ₁) sampled on the trace grid. Real and non-negative:
/// the pulse defines the in-phase axis.
std::vector<std::complex<double>> drive_amplitude(const ModelParams& params,
                                                  const PulseEnvelope& envelope,
                                                  const BlochTrace& grid);

/// V₀·(α(t) + e^{iφ}·√(Γ₁/2)·⟨σ₋(t)⟩)
FieldTrace output_field(std::span<const std::complex<double>> alpha, const BlochTrace& trace,
                        double gamma1, FieldPhase phase, double v0 = 1.0);

/// The atom's contribution alone, V₀·e^{iφ}·√(Γ₁/2)·⟨σ₋(t)⟩.
FieldTrace emission_field(const BlochTrace& trace, double gamma1, FieldPhase phase,
                          double v0 = 1.0);

/// Output minus the bare pulse V₀·α(t); mirrors subtracting the far-detuned
/// measurement.
FieldTrace radiation_trace(const FieldTrace& output, std::span<const std::complex<double>> alpha,
                           double v0 = 1.0);

/// Power going right, |α|² − α·√(Γ₁/2)·⟨σy⟩ + (Γ₁/2)·P_e, with the state
/// given in `convention`.
double right_power(double alpha_now, const BlochState& state, double gamma1,
                   FieldPhase convention = FieldPhase::HalfPi);

/// Power going left, (Γ₁/2)·(1 − ⟨σz⟩)/2.
double left_power(const BlochState& state, double gamma1);

/// Trapezoid integral of uniformly sampled values over [a, b]; partial end
/// intervals use linear interpolation. [a, b] must lie inside the samples.
double integrate_window(std::span<const double> values, double t0, double dt, double a, double b);

/// Integrates |α|², P_r and P_l over the window from an existing simulation.
EnergyReport energy_audit(const BlochTrace& trace, std::span<const std::complex<double>> alpha,
                          double gamma1, double t_start, double t_end);

/// Simulates as far as needed and audits the window.
EnergyReport energy_audit(const ModelParams& params, const PulseEnvelope& envelope,
                          double t_start, double t_end);

} // namespace wqed
