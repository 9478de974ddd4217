#include "wqed/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "wqed/parallel.hpp"
#include "wqed/units.hpp"

namespace wqed {

namespace {

constexpr double kRelativeTolerance = 1e-9;
constexpr double kDiameterTolerance = 1e-6;
constexpr double kGradientTolerance = 1e-3;
// Residual energy below this fraction of the data energy counts as an exact
// fit; the gradient angle is meaningless there because r is roundoff.
constexpr double kExactFitFraction = 1e-12;

bool close(double a, double b, double scale)
{
    return std::abs(a - b) <= 1e-9 * std::max(1.0, scale);
}

void check_range(const char* name, std::pair<double, double> range, double value, bool positive)
{
    const auto [lo, hi] = range;
    if (!(lo <= hi) || (positive && !(lo > 0.0)))
        throw std::invalid_argument(std::string("invalid bounds for ") + name);
    if (!(value >= lo && value <= hi))
        throw std::invalid_argument(std::string("initial ") + name + " lies outside its bounds");
}

} // namespace

FitBounds FitBounds::around(const ModelParams& guess, double factor, double offset_span_mhz)
{
    if (!(factor > 1.0) || !(offset_span_mhz >= 0.0))
        throw std::invalid_argument("bounds factor must exceed 1 and the offset span be non-negative");
    FitBounds b;
    b.offset_mhz = {-offset_span_mhz, offset_span_mhz};
    b.rabi = {guess.rabi_peak / factor, guess.rabi_peak * factor};
    b.gamma1 = {guess.gamma1 / factor, guess.gamma1 * factor};
    b.gamma_phi = {guess.gamma_phi / factor, guess.gamma_phi * factor};
    return b;
}

void FitProblem::validate() const
{
    initial_guess.validate();
    if (data.size() < FitObjective::dims)
        throw std::invalid_argument("a four-parameter fit needs at least 4 detuning rows");
    if (data.radiation.size() != data.size())
        throw std::invalid_argument("scan has mismatched detuning and trace counts");
    if (!weights.empty()) {
        if (weights.size() != data.size())
            throw std::invalid_argument("need one weight per detuning row");
        for (double w : weights)
            if (!(w >= 0.0) || !std::isfinite(w))
                throw std::invalid_argument("weights must be finite and non-negative");
    }
    check_range("qubit offset", bounds.offset_mhz, 0.0, false);
    check_range("rabi", bounds.rabi, initial_guess.rabi_peak, true);
    check_range("gamma1", bounds.gamma1, initial_guess.gamma1, true);
    check_range("gamma_phi", bounds.gamma_phi, initial_guess.gamma_phi, true);
    if (max_iterations < 1)
        throw std::invalid_argument("max_iterations must be positive");

    bool any_signal = false;
    for (const auto& row : data.radiation) {
        if (row.size() < 2)
            throw std::invalid_argument("data rows need at least two samples");
        if (!close(row.t0, 0.0, 1.0) || !close(row.dt, envelope.dt(), envelope.dt()))
            throw std::invalid_argument("data grid does not match the simulation grid");
        if (row.size() != data.radiation.front().size())
            throw std::invalid_argument("data rows have different lengths");
        if (row.time(row.size() - 1) < envelope.duration() - 1e-9)
            throw std::invalid_argument("data rows must cover the whole pulse");
        for (const auto& v : row.samples) {
            if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
                throw std::invalid_argument("data contains non-finite samples");
            any_signal = any_signal || v != std::complex<double>{};
        }
    }
    if (!any_signal)
        throw std::invalid_argument("data are identically zero");
    if (model_chain)
        model_chain->validate(envelope.dt());
}

FitObjective::FitObjective(const FitProblem& problem) : problem_(problem)
{
    problem.validate();
    const auto& b = problem.bounds;
    lower_ = {b.offset_mhz.first, std::log(b.rabi.first), std::log(b.gamma1.first),
              std::log(b.gamma_phi.first)};
    upper_ = {b.offset_mhz.second, std::log(b.rabi.second), std::log(b.gamma1.second),
              std::log(b.gamma_phi.second)};
    weights_ = problem.weights.empty() ? std::vector<double>(problem.data.size(), 1.0)
                                       : problem.weights;
}

FitObjective::Point FitObjective::to_point(const ModelParams& p, double offset_mhz) const
{
    return {offset_mhz, std::log(p.rabi_peak), std::log(p.gamma1), std::log(p.gamma_phi)};
}

ModelParams FitObjective::to_params(const Point& x) const
{
    ModelParams p = problem_.initial_guess;
    p.qubit_frequency_ghz = problem_.initial_guess.qubit_frequency_ghz + x[0] * 1e-3;
    p.rabi_peak = std::exp(x[1]);
    p.gamma1 = std::exp(x[2]);
    p.gamma_phi = std::exp(x[3]);
    p.detuning = 0.0;
    return p;
}

FitObjective::Point FitObjective::clamp(Point x) const
{
    for (std::size_t i = 0; i < dims; ++i)
        x[i] = std::clamp(x[i], lower_[i], upper_[i]);
    return x;
}

FieldTrace FitObjective::model_row(const Point& x, std::size_t row) const
{
    auto p = to_params(x);
    p.detuning = mhz_to_angular(problem_.data.detuning_mhz[row] - x[0]);
    const auto& data = problem_.data.radiation[row];
    auto model = simulate_radiation(p, problem_.envelope, data.time(data.size() - 1), problem_.v0);
    if (model.size() != data.size())
        throw std::invalid_argument("model and data grids differ in length");
    if (problem_.model_chain)
        model = apply_chain_noiseless(model, *problem_.model_chain);
    return model;
}

Eigen::VectorXd FitObjective::residuals(const Point& x) const
{
    const auto& rows = problem_.data.radiation;
    const std::size_t n = rows.front().size();
    Eigen::VectorXd r(static_cast<Eigen::Index>(2 * n * rows.size()));
    parallel_for(
        rows.size(),
        [&](std::size_t k) {
            const auto model = model_row(x, k);
            const double sw = std::sqrt(weights_[k]);
            const auto base = static_cast<Eigen::Index>(2 * n * k);
            for (std::size_t i = 0; i < n; ++i) {
                const auto d = model.samples[i] - rows[k].samples[i];
                r(base + static_cast<Eigen::Index>(2 * i)) = sw * d.real();
                r(base + static_cast<Eigen::Index>(2 * i + 1)) = sw * d.imag();
            }
        },
        problem_.threads);
    ++evaluations_;
    return r;
}

double FitObjective::value(const Point& x) const
{
    return residuals(x).squaredNorm();
}

Eigen::MatrixXd FitObjective::jacobian(const Point& x, double step) const
{
    Eigen::MatrixXd j;
    for (std::size_t c = 0; c < dims; ++c) {
        Point up = x;
        Point down = x;
        up[c] += step;
        down[c] -= step;
        const auto ru = residuals(up);
        const auto rd = residuals(down);
        if (j.size() == 0)
            j.resize(ru.size(), static_cast<Eigen::Index>(dims));
        j.col(static_cast<Eigen::Index>(c)) = (ru - rd) / (2.0 * step);
    }
    return j;
}

Eigen::VectorXd FitObjective::model_gradient(const Point& x) const
{
    return 2.0 * jacobian(x).transpose() * residuals(x);
}

double trace_objective(std::span<const FieldTrace> model, std::span<const FieldTrace> data,
                       std::span<const double> weights)
{
    if (model.size() != data.size() || (!weights.empty() && weights.size() != data.size()))
        throw std::invalid_argument("model, data and weights must have one entry per row");
    double total = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
        if (model[k].size() != data[k].size())
            throw std::invalid_argument("model and data grids differ in length");
        double row = 0.0;
        for (std::size_t i = 0; i < data[k].size(); ++i)
            row += std::norm(model[k].samples[i] - data[k].samples[i]);
        total += (weights.empty() ? 1.0 : weights[k]) * row;
    }
    return total;
}

double residual(const FitProblem& problem, const ModelParams& params, double offset_mhz)
{
    problem.validate();
    params.validate();
    FitProblem widened = problem;
    widened.initial_guess = params;
    widened.initial_guess.qubit_frequency_ghz = problem.initial_guess.qubit_frequency_ghz;
    const double inf = std::numeric_limits<double>::infinity();
    widened.bounds = {{-inf, inf}, {params.rabi_peak, params.rabi_peak},
                      {params.gamma1, params.gamma1}, {params.gamma_phi, params.gamma_phi}};
    if (!(params.rabi_peak > 0.0) || !(params.gamma1 > 0.0) || !(params.gamma_phi > 0.0))
        throw std::invalid_argument("fit parameters must be positive");
    const FitObjective objective(widened);
    return objective.value(objective.to_point(params, offset_mhz));
}

namespace {

using Point = FitObjective::Point;

struct Tracker {
    explicit Tracker(const FitObjective& o) : objective(o) {}

    const FitObjective& objective;
    Point best_x{};
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> log;
    int iterations = 0;

    double eval(const Point& x)
    {
        const double f = objective.value(x);
        if (f < best) {
            best = f;
            best_x = x;
        }
        return f;
    }
    void iterate()
    {
        ++iterations;
        log.push_back(best);
    }
};

double gradient_ratio(const Eigen::MatrixXd& j, const Eigen::VectorXd& r)
{
    const double denom = j.norm() * r.norm();
    if (denom == 0.0)
        return 0.0;
    return (j.transpose() * r).norm() / denom;
}

// Levenberg–Marquardt on the stacked residuals. Returns the relative
// objective change of the last accepted step, or 0 when no step helped.
double lm_steps(Tracker& t, int max_steps, int budget)
{
    double lambda = 1e-3;
    double last_change = 0.0;
    for (int s = 0; s < max_steps && t.iterations < budget; ++s) {
        const Point x = t.best_x;
        const double f0 = t.best;
        const auto r = t.objective.residuals(x);
        const auto j = t.objective.jacobian(x);
        const Eigen::MatrixXd a = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        bool accepted = false;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::MatrixXd damped = a;
            damped.diagonal() += lambda * a.diagonal();
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            Point trial = x;
            for (std::size_t i = 0; i < FitObjective::dims; ++i)
                trial[i] += step(static_cast<Eigen::Index>(i));
            trial = t.objective.clamp(trial);
            const double f = t.eval(trial);
            if (f < f0) {
                lambda = std::max(lambda / 3.0, 1e-12);
                last_change = (f0 - f) / std::max(f0, std::numeric_limits<double>::min());
                accepted = true;
                break;
            }
            lambda *= 4.0;
        }
        t.iterate();
        if (!accepted)
            return 0.0;
    }
    return last_change;
}

// Bounded Nelder–Mead; points are projected onto the box. Returns true when a
// tolerance was met before the iteration budget ran out.
bool nelder_mead(Tracker& t, const Point& start, const Point& scale, int budget)
{
    constexpr std::size_t n = FitObjective::dims;
    std::array<Point, n + 1> pts;
    std::array<double, n + 1> f{};
    pts[0] = t.objective.clamp(start);
    for (std::size_t i = 0; i < n; ++i) {
        Point p = pts[0];
        p[i] += scale[i];
        if (t.objective.clamp(p)[i] == pts[0][i])
            p[i] = pts[0][i] - scale[i];
        pts[i + 1] = t.objective.clamp(p);
    }
    for (std::size_t i = 0; i <= n; ++i)
        f[i] = t.eval(pts[i]);

    std::array<std::size_t, n + 1> order{};
    while (t.iterations < budget) {
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return f[a] < f[b]; });
        const auto lo = order.front();
        const auto hi = order.back();
        const auto second = order[n - 1];

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            double d = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                d = std::max(d, std::abs(pts[i][k] - pts[lo][k]) / scale[k]);
            diameter = std::max(diameter, d);
        }
        const double spread = (f[hi] - f[lo]) / std::max(std::abs(f[lo]), std::numeric_limits<double>::min());
        if (spread < kRelativeTolerance || diameter * 0.1 < kDiameterTolerance)
            return true;

        Point centroid{};
        for (std::size_t i = 0; i <= n; ++i)
            if (i != hi)
                for (std::size_t k = 0; k < n; ++k)
                    centroid[k] += pts[i][k] / static_cast<double>(n);
        auto along = [&](double coef) {
            Point p;
            for (std::size_t k = 0; k < n; ++k)
                p[k] = centroid[k] + coef * (pts[hi][k] - centroid[k]);
            return t.objective.clamp(p);
        };

        const Point xr = along(-1.0);
        const double fr = t.eval(xr);
        if (fr < f[lo]) {
            const Point xe = along(-2.0);
            const double fe = t.eval(xe);
            if (fe < fr) {
                pts[hi] = xe;
                f[hi] = fe;
            } else {
                pts[hi] = xr;
                f[hi] = fr;
            }
        } else if (fr < f[second]) {
            pts[hi] = xr;
            f[hi] = fr;
        } else {
            const bool outside = fr < f[hi];
            const Point xc = along(outside ? -0.5 : 0.5);
            const double fc = t.eval(xc);
            if (fc < (outside ? fr : f[hi])) {
                pts[hi] = xc;
                f[hi] = fc;
            } else {
                for (std::size_t i = 0; i <= n; ++i) {
                    if (i == lo)
                        continue;
                    for (std::size_t k = 0; k < n; ++k)
                        pts[i][k] = pts[lo][k] + 0.5 * (pts[i][k] - pts[lo][k]);
                    pts[i] = t.objective.clamp(pts[i]);
                    f[i] = t.eval(pts[i]);
                }
            }
        }
        t.iterate();
    }
    return false;
}

// Coarse search along ln Ω_R. An error of a few tens of percent in the Rabi
// frequency puts the oscillating traces out of phase, which a local method
// cannot recover from.
Point rabi_prescan(Tracker& t, const Point& start)
{
    Point best = start;
    double fbest = t.eval(start);
    for (int k = -20; k <= 20; ++k) {
        if (k == 0)
            continue;
        Point p = start;
        p[1] += 0.02 * k;
        p = t.objective.clamp(p);
        const double f = t.eval(p);
        if (f < fbest) {
            fbest = f;
            best = p;
        }
    }
    return best;
}

} // namespace

FitResult fit(const FitProblem& problem)
{
    const FitObjective objective(problem);
    Tracker t(objective);
    const int budget = problem.max_iterations;

    const Point x0 = objective.clamp(objective.to_point(problem.initial_guess, 0.0));
    const Point start = rabi_prescan(t, x0);
    t.best_x = start;
    t.best = objective.value(start);

    double data_energy = 0.0;
    for (std::size_t k = 0; k < problem.data.size(); ++k) {
        double e = 0.0;
        for (const auto& v : problem.data.radiation[k].samples)
            e += std::norm(v);
        data_energy += (problem.weights.empty() ? 1.0 : problem.weights[k]) * e;
    }
    auto stationary = [&](const Eigen::MatrixXd& j, const Eigen::VectorXd& r) {
        return r.squaredNorm() <= kExactFitFraction * data_energy || gradient_ratio(j, r) <= kGradientTolerance;
    };

    bool tolerance_met = false;
    lm_steps(t, 2, budget);
    if (stationary(objective.jacobian(t.best_x), objective.residuals(t.best_x))) {
        tolerance_met = true;
    } else {
        const Point scale{0.5, 0.05, 0.1, 0.1};
        tolerance_met = nelder_mead(t, t.best_x, scale, budget);
        for (int round = 0; round < 20 && t.iterations < budget; ++round) {
            const double change = lm_steps(t, 1, budget);
            if (change < kRelativeTolerance)
                break;
        }
    }

    FitResult result;
    const auto r = objective.residuals(t.best_x);
    const auto j = objective.jacobian(t.best_x);
    const double ratio = gradient_ratio(j, r);
    result.params = objective.to_params(t.best_x);
    result.qubit_offset_mhz = t.best_x[0];
    result.objective = r.squaredNorm();
    result.residual_norm = std::sqrt(result.objective);
    result.gradient_norm = ratio;
    result.iterations = t.iterations;
    result.converged = tolerance_met && stationary(j, r);
    result.log = std::move(t.log);

    const auto dof = static_cast<double>(r.size()) - static_cast<double>(FitObjective::dims);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (dof > 0.0 && lu.isInvertible()) {
        const Eigen::MatrixXd cov = lu.inverse() * (result.objective / dof);
        result.uncertainty.offset_mhz = std::sqrt(std::max(0.0, cov(0, 0)));
        result.uncertainty.rabi = result.params.rabi_peak * std::sqrt(std::max(0.0, cov(1, 1)));
        result.uncertainty.gamma1 = result.params.gamma1 * std::sqrt(std::max(0.0, cov(2, 2)));
        result.uncertainty.gamma_phi = result.params.gamma_phi * std::sqrt(std::max(0.0, cov(3, 3)));
    } else {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        result.uncertainty = {nan, nan, nan, nan};
    }
    return result;
}

ScanResult synthetic_scan(const ModelParams& truth, const PulseEnvelope& envelope,
                          std::span<const double> detuning_mhz, double t_end,
                          const std::optional<ChainConfig>& chain, double v0, unsigned threads)
{
    ScanOptions options;
    options.t_end = t_end;
    options.v0 = v0;
    options.threads = threads;
    auto scan = detuning_scan(truth, envelope, detuning_mhz, options);
    if (!chain)
        return scan;

    ChainConfig cfg = *chain;
    if (!cfg.reference_power) {
        double peak = 0.0;
        for (const auto& row : scan.radiation)
            for (const auto& v : row.samples)
                peak = std::max(peak, std::norm(v));
        cfg.reference_power = peak;
    }
    parallel_for(
        scan.size(),
        [&](std::size_t k) {
            scan.radiation[k] = apply_chain(scan.radiation[k], cfg, static_cast<std::uint64_t>(k));
            scan.spectra[k] = radiation_spectrum(scan.radiation[k], envelope, options);
        },
        threads);
    return scan;
}

} // namespace wqed
