#include "wqed/fields.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wqed {

namespace {

void require_same_grid(std::size_t alpha_size, std::size_t trace_size)
{
    if (alpha_size != trace_size)
        throw std::invalid_argument("drive amplitude and Bloch trace are on different grids");
}

} // namespace

std::vector<std::complex<double>> drive_amplitude(const ModelParams& params,
                                                  const PulseEnvelope& envelope,
                                                  const BlochTrace& grid)
{
    const double peak = drive_amplitude_from_rabi(params.rabi_peak, params.gamma1);
    std::vector<std::complex<double>> alpha(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i)
        alpha[i] = peak * envelope.value_at(grid.time(i));
    return alpha;
}

FieldTrace output_field(std::span<const std::complex<double>> alpha, const BlochTrace& trace,
                        double gamma1, FieldPhase phase, double v0)
{
    require_same_grid(alpha.size(), trace.size());
    const auto coupling = phase_factor(phase) * std::sqrt(0.5 * gamma1);
    FieldTrace out{trace.t0, trace.dt, std::vector<std::complex<double>>(trace.size())};
    for (std::size_t i = 0; i < trace.size(); ++i)
        out.samples[i] = v0 * (alpha[i] + coupling * trace.sigma_minus[i]);
    return out;
}

FieldTrace emission_field(const BlochTrace& trace, double gamma1, FieldPhase phase, double v0)
{
    const auto coupling = v0 * phase_factor(phase) * std::sqrt(0.5 * gamma1);
    FieldTrace out{trace.t0, trace.dt, std::vector<std::complex<double>>(trace.size())};
    for (std::size_t i = 0; i < trace.size(); ++i)
        out.samples[i] = coupling * trace.sigma_minus[i];
    return out;
}

FieldTrace radiation_trace(const FieldTrace& output, std::span<const std::complex<double>> alpha,
                           double v0)
{
    require_same_grid(alpha.size(), output.size());
    FieldTrace out = output;
    for (std::size_t i = 0; i < out.size(); ++i)
        out.samples[i] -= v0 * alpha[i];
    return out;
}

double right_power(double alpha_now, const BlochState& state, double gamma1, FieldPhase convention)
{
    const auto s = from_convention(state, convention);
    return alpha_now * alpha_now - alpha_now * std::sqrt(0.5 * gamma1) * s.sy +
           0.5 * gamma1 * s.excited_population();
}

double left_power(const BlochState& state, double gamma1)
{
    return 0.5 * gamma1 * state.excited_population();
}

double integrate_window(std::span<const double> values, double t0, double dt, double a, double b)
{
    if (values.size() < 2 || !(dt > 0.0))
        throw std::invalid_argument("need at least two samples on a positive step");
    const double t_last = t0 + static_cast<double>(values.size() - 1) * dt;
    const double slack = 1e-9 * dt;
    if (!(a >= t0 - slack) || !(b <= t_last + slack) || !(a <= b))
        throw std::invalid_argument("integration window lies outside the sampled span");
    a = std::max(a, t0);
    b = std::min(b, t_last);

    auto interp = [&](double t) {
        const double x = (t - t0) / dt;
        const auto i = std::min(static_cast<std::size_t>(std::floor(x)), values.size() - 2);
        const double f = x - static_cast<double>(i);
        return values[i] + f * (values[i + 1] - values[i]);
    };

    const double xa = (a - t0) / dt;
    const double xb = (b - t0) / dt;
    const auto first_full = static_cast<std::size_t>(std::ceil(xa));
    const auto last_full = static_cast<std::size_t>(std::floor(xb));
    if (first_full > last_full) // a and b in the same cell
        return 0.5 * (interp(a) + interp(b)) * (b - a);

    double sum = 0.0;
    sum += 0.5 * (interp(a) + values[first_full]) * (static_cast<double>(first_full) - xa) * dt;
    for (std::size_t i = first_full; i < last_full; ++i)
        sum += 0.5 * (values[i] + values[i + 1]) * dt;
    sum += 0.5 * (values[last_full] + interp(b)) * (xb - static_cast<double>(last_full)) * dt;
    return sum;
}

EnergyReport energy_audit(const BlochTrace& trace, std::span<const std::complex<double>> alpha,
                          double gamma1, double t_start, double t_end)
{
    require_same_grid(alpha.size(), trace.size());
    if (!(t_start < t_end))
        throw std::invalid_argument("audit window must have t_start < t_end");
    const double span_end = trace.time(trace.size() - 1);
    if (t_start < trace.t0 - 1e-9 || t_end > span_end + 1e-9)
        throw std::invalid_argument("audit window lies outside the simulated span");

    std::vector<double> input(trace.size()), right(trace.size()), left(trace.size());
    for (std::size_t i = 0; i < trace.size(); ++i) {
        const double a = alpha[i].real();
        input[i] = std::norm(alpha[i]);
        right[i] = right_power(a, trace.states[i], gamma1, trace.convention);
        left[i] = left_power(trace.states[i], gamma1);
    }

    EnergyReport r;
    r.t_start = t_start;
    r.t_end = t_end;
    r.input_photons = integrate_window(input, trace.t0, trace.dt, t_start, t_end);
    r.transmitted_photons = integrate_window(right, trace.t0, trace.dt, t_start, t_end);
    r.reflected_photons = integrate_window(left, trace.t0, trace.dt, t_start, t_end);
    r.deficit = r.input_photons - r.transmitted_photons;
    return r;
}

EnergyReport energy_audit(const ModelParams& params, const PulseEnvelope& envelope,
                          double t_start, double t_end)
{
    if (!(t_start >= 0.0) || !(t_start < t_end) || !std::isfinite(t_end))
        throw std::invalid_argument("audit window must satisfy 0 <= t_start < t_end");
    const double dt = envelope.dt();
    const double span = std::max(envelope.duration(), std::ceil(t_end / dt) * dt);
    const auto trace = integrate(params, envelope, span);
    const auto alpha = drive_amplitude(params, envelope, trace);
    return energy_audit(trace, alpha, params.gamma1, t_start, t_end);
}

} // namespace wqed
