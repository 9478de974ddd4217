#pragma once

#include <utility>

namespace wqed {

/// Analytic dressed-state quantities for a drive Ω_R detuned by δ. All
/// frequencies angular (rad/ns); amplitudes are dimensionless.
struct DressedPrediction {
    /// Ω = √(Ω_R² + δ²)
    double omega_gen = 0.0;
    /// |+n⟩ = a|g,n+1⟩ + b|e,n⟩
    std::pair<double, double> coeff_plus;
    /// |−n⟩ = a|g,n+1⟩ + b|e,n⟩
    std::pair<double, double> coeff_minus;
    /// Peak at ω_d − Ω.
    double amp_lower = 0.0;
    /// Peak at ω_d + Ω.
    double amp_upper = 0.0;
};

double generalized_rabi(double rabi, double detuning);

/// (−Ω_R(Ω+δ)/(4Ω²), Ω_R(Ω−δ)/(4Ω²)). Throws std::invalid_argument when
/// both Ω_R and δ vanish.
std::pair<double, double> sideband_amplitudes(double rabi, double detuning);

DressedPrediction dressed_prediction(double rabi, double detuning);

} // namespace wqed
