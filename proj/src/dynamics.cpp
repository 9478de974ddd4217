#include "wqed/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "wqed/errors.hpp"
#include "wqed/units.hpp"

namespace wqed {

BlochRates BlochRates::from(const ModelParams& params)
{
    return {params.rabi_peak, params.detuning, params.gamma1, params.gamma2()};
}

BlochState bloch_derivative(const BlochState& s, double rabi_now, double detuning, double gamma1,
                            double gamma2)
{
    return {
        -detuning * s.sy - gamma2 * s.sx,
        detuning * s.sx + rabi_now * s.sz - gamma2 * s.sy,
        -rabi_now * s.sy + gamma1 * (1.0 - s.sz),
    };
}

namespace {

BlochState axpy(const BlochState& base, double h, const BlochState& d)
{
    return {base.sx + h * d.sx, base.sy + h * d.sy, base.sz + h * d.sz};
}

} // namespace

double max_stable_step(const BlochRates& rates)
{
    const double inf = std::numeric_limits<double>::infinity();
    const double rabi_period = rates.rabi_peak > 0.0 ? kTwoPi / rates.rabi_peak : inf;
    const double coherence_time = rates.gamma2 > 0.0 ? 1.0 / rates.gamma2 : inf;
    return 0.02 * std::min(rabi_period, coherence_time);
}

BlochState to_convention(const BlochState& s, FieldPhase phase)
{
    if (phase == FieldPhase::HalfPi)
        return s;
    // e^{iφ}⟨σ₋⟩ is convention independent, so ⟨σ₋⟩ picks up a factor i.
    return {-s.sy, s.sx, s.sz};
}

BlochState from_convention(const BlochState& s, FieldPhase phase)
{
    if (phase == FieldPhase::HalfPi)
        return s;
    return {s.sy, -s.sx, s.sz};
}

BlochTrace integrate(const BlochRates& rates, const PulseEnvelope& envelope, double t_end,
                     BlochState initial)
{
    if (!std::isfinite(rates.rabi_peak) || !std::isfinite(rates.detuning) ||
        !std::isfinite(rates.gamma1) || !std::isfinite(rates.gamma2))
        throw std::invalid_argument("Bloch rates must be finite");
    if (rates.gamma1 < 0.0 || rates.gamma2 < 0.0 || rates.rabi_peak < 0.0)
        throw std::invalid_argument("Bloch rates must be non-negative");
    if (!(t_end >= envelope.duration()))
        throw std::invalid_argument("t_end must cover the whole envelope");

    const double dt = envelope.dt();
    const double limit = max_stable_step(rates);
    if (dt > limit) {
        std::ostringstream msg;
        msg << "time step " << dt << " ns is too coarse for these rates; use dt_ns <= " << limit;
        throw std::invalid_argument(msg.str());
    }

    const auto n = static_cast<std::size_t>(std::llround(t_end / dt)) + 1;
    BlochTrace trace;
    trace.t0 = 0.0;
    trace.dt = dt;
    trace.states.resize(n);
    trace.sigma_minus.resize(n);

    const double peak = rates.rabi_peak;
    const double det = rates.detuning;
    const double g1 = rates.gamma1;
    const double g2 = rates.gamma2;

    BlochState s = initial;
    trace.states[0] = s;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double w0 = peak * envelope.value_at(t);
        const double wh = peak * envelope.value_at(t + 0.5 * dt);
        const double w1 = peak * envelope.value_at(t + dt);
        const auto k1 = bloch_derivative(s, w0, det, g1, g2);
        const auto k2 = bloch_derivative(axpy(s, 0.5 * dt, k1), wh, det, g1, g2);
        const auto k3 = bloch_derivative(axpy(s, 0.5 * dt, k2), wh, det, g1, g2);
        const auto k4 = bloch_derivative(axpy(s, dt, k3), w1, det, g1, g2);
        s.sx += dt / 6.0 * (k1.sx + 2.0 * k2.sx + 2.0 * k3.sx + k4.sx);
        s.sy += dt / 6.0 * (k1.sy + 2.0 * k2.sy + 2.0 * k3.sy + k4.sy);
        s.sz += dt / 6.0 * (k1.sz + 2.0 * k2.sz + 2.0 * k3.sz + k4.sz);
        trace.states[i + 1] = s;
    }
    if (!std::isfinite(s.sx) || !std::isfinite(s.sy) || !std::isfinite(s.sz))
        throw NumericalError("Bloch integration produced non-finite values");

    for (std::size_t i = 0; i < n; ++i)
        trace.sigma_minus[i] = trace.states[i].sigma_minus();
    return trace;
}

BlochTrace integrate(const ModelParams& params, const PulseEnvelope& envelope, double t_end)
{
    params.validate();
    auto trace = integrate(BlochRates::from(params), envelope, t_end);
    if (params.field_phase != FieldPhase::HalfPi) {
        for (std::size_t i = 0; i < trace.size(); ++i) {
            trace.states[i] = to_convention(trace.states[i], params.field_phase);
            trace.sigma_minus[i] = trace.states[i].sigma_minus();
        }
    }
    trace.convention = params.field_phase;
    return trace;
}

BlochState steady_state(double rabi, double detuning, double gamma1, double gamma2)
{
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0))
        throw std::invalid_argument("steady state needs positive gamma1 and gamma2");
    Eigen::Matrix3d a;
    a << -gamma2, -detuning, 0.0,
         detuning, -gamma2, rabi,
         0.0, -rabi, -gamma1;
    const Eigen::Vector3d b(0.0, 0.0, -gamma1);
    Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    if (!lu.isInvertible())
        throw NumericalError("Bloch stationarity system is singular");
    const Eigen::Vector3d s = lu.solve(b);
    return {s(0), s(1), s(2)};
}

DensityVector to_density_vector(const BlochState& s)
{
    DensityVector rho;
    rho(vec_index::gg) = 0.5 * (1.0 + s.sz);
    rho(vec_index::ge) = {0.5 * s.sx, -0.5 * s.sy};
    rho(vec_index::eg) = {0.5 * s.sx, 0.5 * s.sy};
    rho(vec_index::ee) = 0.5 * (1.0 - s.sz);
    return rho;
}

BlochState from_density_vector(const DensityVector& rho)
{
    const auto eg = rho(vec_index::eg);
    return {2.0 * eg.real(), 2.0 * eg.imag(),
            rho(vec_index::gg).real() - rho(vec_index::ee).real()};
}

Liouvillian Liouvillian::build(double rabi, double detuning, double gamma1, double gamma2)
{
    using M2 = Eigen::Matrix2cd;
    const std::complex<double> i(0.0, 1.0);
    M2 sx, sz, sm;
    sx << 0.0, 1.0, 1.0, 0.0;
    sz << 1.0, 0.0, 0.0, -1.0;
    sm << 0.0, 1.0, 0.0, 0.0;
    const M2 sp = sm.adjoint();
    const M2 h = 0.5 * (-rabi * sx + detuning * sz);
    const double dephasing = gamma2 - 0.5 * gamma1;

    Liouvillian l;
    for (int k = 0; k < 4; ++k) {
        M2 basis = M2::Zero();
        basis(k / 2, k % 2) = 1.0;
        const M2 d = -i * (h * basis - basis * h) +
                     gamma1 * (sm * basis * sp - 0.5 * (sp * sm * basis + basis * sp * sm)) +
                     0.5 * dephasing * (sz * basis * sz - basis);
        for (int r = 0; r < 4; ++r)
            l.generator(r, k) = d(r / 2, r % 2);
    }
    return l;
}

Superoperator propagator(const Superoperator& generator, double delta_t)
{
    if (!(delta_t >= 0.0) || !std::isfinite(delta_t))
        throw std::invalid_argument("propagation interval must be finite and non-negative");
    if (!generator.allFinite())
        throw std::invalid_argument("generator has non-finite entries");
    if (delta_t == 0.0)
        return Superoperator::Identity();
    const Superoperator scaled = generator * delta_t;
    return scaled.exp();
}

Superoperator propagator(const Liouvillian& liouvillian, double delta_t)
{
    return propagator(liouvillian.generator, delta_t);
}

} // namespace wqed
