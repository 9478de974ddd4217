#include "wqed/dressed.hpp"

#include <cmath>
#include <stdexcept>

namespace wqed {

double generalized_rabi(double rabi, double detuning)
{
    return std::hypot(rabi, detuning);
}

std::pair<double, double> sideband_amplitudes(double rabi, double detuning)
{
    if (rabi == 0.0 && detuning == 0.0)
        throw std::invalid_argument("sideband amplitudes are undefined without drive or detuning");
    const double omega = generalized_rabi(rabi, detuning);
    const double denom = 4.0 * omega * omega;
    return {-rabi * (omega + detuning) / denom, rabi * (omega - detuning) / denom};
}

DressedPrediction dressed_prediction(double rabi, double detuning)
{
    const auto [lower, upper] = sideband_amplitudes(rabi, detuning);
    const double omega = generalized_rabi(rabi, detuning);
    const double a = std::sqrt((omega + detuning) / (2.0 * omega));
    const double b = std::sqrt((omega - detuning) / (2.0 * omega));
    DressedPrediction p;
    p.omega_gen = omega;
    p.coeff_plus = {a, b};
    p.coeff_minus = {b, -a};
    p.amp_lower = lower;
    p.amp_upper = upper;
    return p;
}

} // namespace wqed
