#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "wqed/core_model.hpp"

namespace wqed {

/// Bloch vector (⟨σx⟩, ⟨σy⟩, ⟨σz⟩). The ground state is (0, 0, +1).
struct BlochState {
    double sx = 0.0;
    double sy = 0.0;
    double sz = 1.0;

    static BlochState ground() { return {0.0, 0.0, 1.0}; }
    static BlochState excited() { return {0.0, 0.0, -1.0}; }

    double excited_population() const { return 0.5 * (1.0 - sz); }
    /// ⟨σ₋⟩ = (⟨σx⟩ + i⟨σy⟩)/2
    std::complex<double> sigma_minus() const { return {0.5 * sx, 0.5 * sy}; }
    double norm_squared() const { return sx * sx + sy * sy + sz * sz; }
};

/// The four numbers the Bloch equations need.
struct BlochRates {
    double rabi_peak = 0.0;
    double detuning = 0.0;
    double gamma1 = 0.0;
    double gamma2 = 0.0;

    static BlochRates from(const ModelParams& params);
};

/// Qubit expectation values on a uniform time grid.
struct BlochTrace {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<BlochState> states;
    std::vector<std::complex<double>> sigma_minus;
    /// Convention the (sx, sy) components are expressed in.
    FieldPhase convention = FieldPhase::HalfPi;

    std::size_t size() const { return states.size(); }
    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
};

/// Right-hand side of the damped Bloch equations in the frame rotating at
/// the drive frequency:
///   ṡx = −δ·sy − Γ₂·sx
///   ṡy =  δ·sx + Ω·sz − Γ₂·sy
///   ṡz = −Ω·sy + Γ₁·(1 − sz)
BlochState bloch_derivative(const BlochState& s, double rabi_now, double detuning, double gamma1,
                            double gamma2);

/// Fixed-step RK4 on the envelope grid from t = 0 to t_end, starting from
/// the ground state. States are reported in the params' field-phase
/// convention.
BlochTrace integrate(const ModelParams& params, const PulseEnvelope& envelope, double t_end);

/// Same integrator with explicit rates (Γ may be zero here) and initial state.
/// Output is in the HalfPi convention.
BlochTrace integrate(const BlochRates& rates, const PulseEnvelope& envelope, double t_end,
                     BlochState initial = BlochState::ground());

/// Largest step integrate() accepts: 0.02·min(2π/Ω_R, 1/Γ₂).
double max_stable_step(const BlochRates& rates);

/// Expresses a HalfPi-convention state in the given convention.
BlochState to_convention(const BlochState& canonical, FieldPhase phase);
/// Inverse of to_convention.
BlochState from_convention(const BlochState& state, FieldPhase phase);

/// Stationary point of the Bloch equations under constant drive.
BlochState steady_state(double rabi, double detuning, double gamma1, double gamma2);

// Density-matrix picture. Operators on the qubit are vectorised row-major in
// the basis {|g⟩⟨g|, |g⟩⟨e|, |e⟩⟨g|, |e⟩⟨e|}.

using DensityVector = Eigen::Vector4cd;
using Superoperator = Eigen::Matrix4cd;

namespace vec_index {
inline constexpr int gg = 0;
inline constexpr int ge = 1;
inline constexpr int eg = 2;
inline constexpr int ee = 3;
} // namespace vec_index

DensityVector to_density_vector(const BlochState& s);
BlochState from_density_vector(const DensityVector& rho);

/// Lindblad generator for H = (−Ω σx + δ σz)/2, decay Γ₁ through σ₋ and pure
/// dephasing Γ₂ − Γ₁/2 through σz/√2.
struct Liouvillian {
    Superoperator generator;

    static Liouvillian build(double rabi, double detuning, double gamma1, double gamma2);
};

/// exp(L·Δt). Throws std::invalid_argument for Δt < 0 or non-finite entries.
Superoperator propagator(const Liouvillian& liouvillian, double delta_t);
Superoperator propagator(const Superoperator& generator, double delta_t);

} // namespace wqed
