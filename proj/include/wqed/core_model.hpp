#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wqed {

/// Which interaction-Hamiltonian convention fixes the phase e^{iφ} in front
/// of the emitted field. HalfPi corresponds to g(a†σ₋ + aσ₊), Zero to
/// ig(a†σ₋ − aσ₊).
enum class FieldPhase { Zero, HalfPi };

std::complex<double> phase_factor(FieldPhase phase);
double phase_radians(FieldPhase phase);

/// Qubit and drive parameters. All rates are angular (rad/ns).
struct ModelParams {
    double qubit_frequency_ghz = 4.835;
    double gamma1 = 0.0;
    double gamma_phi = 0.0;
    /// δ = ω_d − ω_q
    double detuning = 0.0;
    /// Ω_R at the envelope maximum.
    double rabi_peak = 0.0;
    FieldPhase field_phase = FieldPhase::HalfPi;

    double gamma2() const { return 0.5 * gamma1 + gamma_phi; }

    /// Throws std::invalid_argument when an invariant is broken.
    void validate() const;

    /// Builds parameters from ordinary frequencies in MHz.
    static ModelParams from_mhz(double rabi_mhz, double gamma1_mhz, double gamma_phi_mhz,
                                double detuning_mhz,
                                FieldPhase phase = FieldPhase::HalfPi);

    /// Fitted values of the reference device: Ω_R/2π = 19.8 MHz,
    /// Γ₁/2π = 0.9 MHz, γ_φ/2π = 0.6 MHz, resonant drive.
    static ModelParams reference();
};

/// Sampled, normalised drive envelope on a uniform grid starting at t = 0.
class PulseEnvelope {
public:
    PulseEnvelope(double duration, double taper_fraction, double dt, std::vector<double> samples);

    double duration() const { return duration_; }
    double taper_fraction() const { return taper_fraction_; }
    double dt() const { return dt_; }
    std::span<const double> samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }

    /// Linear interpolation between grid samples; zero outside [0, duration].
    double value_at(double t) const;

    /// Length of each raised-cosine ramp.
    double ramp_length() const { return 0.5 * taper_fraction_ * duration_; }

private:
    double duration_;
    double taper_fraction_;
    double dt_;
    std::vector<double> samples_;
};

/// Tukey (raised-cosine tapered) envelope. Each ramp lasts
/// taper_fraction·duration/2 and the plateau is exactly 1.
PulseEnvelope cosine_taper(double duration, double taper_fraction, double dt);

/// Physical scale of the field. Everything defaults to 1, which gives field
/// samples in units of √(photons/ns).
struct CalibrationParams {
    double hbar_omega = 1.0;
    double z0 = 1.0;
    double gain = 1.0;

    /// V₀ = √(G·ħω·Z₀)
    double v0() const;
};

/// ν = Ω_R²/(2Γ₁), photons per ns.
double photon_rate_from_rabi(double rabi, double gamma1);

/// ν = (Γ₁/8)(V_p/V_q)², photons per ns.
double photon_rate_from_amplitude_ratio(double vp_over_vq, double gamma1);

/// Coherent amplitude α = Ω_R/√(2Γ₁) of the drive, so that |α|² is its photon rate.
double drive_amplitude_from_rabi(double rabi, double gamma1);

/// |κ| = √(ħω_q·Z₀·Γ₁/2), the field prefactor of the right-going emission.
double kappa_magnitude(double hbar_omega_q, double z0, double gamma1);

} // namespace wqed
