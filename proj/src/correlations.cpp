#include "wqed/correlations.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "wqed/errors.hpp"
#include "wqed/fft.hpp"
#include "wqed/parallel.hpp"
#include "wqed/units.hpp"

namespace wqed {

PropagatorCache::PropagatorCache(const BlochRates& rates, const PulseEnvelope& envelope,
                                 const TimeGrid& grid)
{
    const std::size_t slices = grid.size > 0 ? grid.size - 1 : 0;
    slice_index_.resize(slices);
    std::map<double, std::size_t> by_drive;
    for (std::size_t k = 0; k < slices; ++k) {
        const double t = grid.time(k);
        const double drive =
            rates.rabi_peak * 0.5 * (envelope.value_at(t) + envelope.value_at(t + grid.dt));
        auto [it, inserted] = by_drive.try_emplace(drive, unique_.size());
        if (inserted) {
            const auto l = Liouvillian::build(drive, rates.detuning, rates.gamma1, rates.gamma2);
            unique_.push_back(propagator(l, grid.dt));
        }
        slice_index_[k] = it->second;
    }
}

namespace {

void check_grid(const PulseEnvelope& envelope, const TimeGrid& grid)
{
    if (grid.size < 1)
        throw std::invalid_argument("correlation grid is empty");
    if (std::abs(grid.dt - envelope.dt()) > 1e-12 * envelope.dt())
        throw std::invalid_argument("correlation grid is not aligned with the dynamics grid");
}

} // namespace

CorrelatorResult two_time_correlator(const BlochRates& rates, const PulseEnvelope& envelope,
                                     const TimeGrid& grid, BlochState initial, unsigned threads)
{
    check_grid(envelope, grid);
    const std::size_t n = grid.size;
    const PropagatorCache cache(rates, envelope, grid);

    std::vector<DensityVector> rho(n);
    rho[0] = to_density_vector(initial);
    for (std::size_t k = 0; k + 1 < n; ++k)
        rho[k + 1] = cache.slice(k) * rho[k];

    CorrelatorResult result;
    result.grid = grid;
    result.single_time.t0 = 0.0;
    result.single_time.dt = grid.dt;
    result.single_time.states.resize(n);
    result.single_time.sigma_minus.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        result.single_time.states[k] = from_density_vector(rho[k]);
        result.single_time.sigma_minus[k] = rho[k](vec_index::eg);
    }

    result.values.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    auto& values = result.values;
    // Column t₁ of the lower triangle holds ⟨σ₊(t₂)σ₋(t₁)⟩ = conj⟨σ₊(t₁)σ₋(t₂)⟩
    // for t₂ ≥ t₁; writing columns keeps each worker on contiguous memory.
    parallel_for(
        n,
        [&](std::size_t i) {
            // ρσ₊ keeps only the |e⟩ column of ρ, moved to |g⟩.
            DensityVector x = DensityVector::Zero();
            x(vec_index::gg) = rho[i](vec_index::ge);
            x(vec_index::eg) = rho[i](vec_index::ee);
            const auto col = static_cast<Eigen::Index>(i);
            for (std::size_t k = i; k < n; ++k) {
                values(static_cast<Eigen::Index>(k), col) = std::conj(x(vec_index::eg));
                if (k + 1 < n)
                    x = cache.slice(k) * x;
            }
        },
        threads);
    for (Eigen::Index c = 0; c < values.cols(); ++c)
        for (Eigen::Index r = c; r < values.rows(); ++r)
            values(c, r) = std::conj(values(r, c));

    if (!values.allFinite())
        throw NumericalError("two-time correlator has non-finite entries");
    return result;
}

CorrelatorResult two_time_correlator(const ModelParams& params, const PulseEnvelope& envelope,
                                     const TimeGrid& grid, unsigned threads)
{
    params.validate();
    auto result = two_time_correlator(BlochRates::from(params), envelope, grid,
                                      BlochState::ground(), threads);
    // ⟨σ₊σ₋⟩ is the same in both conventions; only the single-time frame moves.
    auto& st = result.single_time;
    st.convention = params.field_phase;
    if (params.field_phase != FieldPhase::HalfPi) {
        for (std::size_t k = 0; k < st.size(); ++k) {
            st.states[k] = to_convention(st.states[k], params.field_phase);
            st.sigma_minus[k] = st.states[k].sigma_minus();
        }
    }
    return result;
}

std::size_t correlation_memory_bytes(std::size_t n)
{
    return 2 * n * n * sizeof(std::complex<double>);
}

TwoTimeGrid g1_incoherent(const Eigen::MatrixXcd& two_time, const BlochTrace& trace, double v0,
                          double gamma1)
{
    const auto n = static_cast<Eigen::Index>(trace.size());
    if (two_time.rows() != n || two_time.cols() != n)
        throw std::invalid_argument("correlator and single-time trace are on different grids");
    const double scale = v0 * v0 * gamma1 / 2.0;
    TwoTimeGrid g;
    g.grid = {trace.dt, trace.size()};
    g.values.resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
        const auto s2 = trace.sigma_minus[static_cast<std::size_t>(c)];
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto s1 = std::conj(trace.sigma_minus[static_cast<std::size_t>(r)]);
            g.values(r, c) = scale * (two_time(r, c) - s1 * s2);
        }
    }
    return g;
}

TwoTimeGrid g1_incoherent(const CorrelatorResult& correlator, double v0, double gamma1)
{
    return g1_incoherent(correlator.values, correlator.single_time, v0, gamma1);
}

IpsdMap ipsd(const TwoTimeGrid& grid, const IpsdOptions& options)
{
    const std::size_t n = grid.grid.size;
    const double dt = grid.grid.dt;
    if (n == 0)
        throw std::invalid_argument("correlation grid is empty");
    if (options.zero_pad < 1 || options.row_stride < 1)
        throw std::invalid_argument("zero_pad and row_stride must be at least 1");

    const std::size_t begin = std::min(options.row_begin, n);
    const std::size_t end = std::min(options.row_end, n);
    std::vector<std::size_t> rows;
    for (std::size_t i = begin; i < end; i += options.row_stride)
        rows.push_back(i);

    const std::size_t nfft = next_power_of_two(n * static_cast<std::size_t>(options.zero_pad));
    const auto axis = centered_axis(nfft, dt);
    std::vector<std::size_t> kept;
    IpsdMap map;
    for (std::size_t j = 0; j < nfft; ++j) {
        if (std::abs(axis.frequency[j] * 1.0e3) <= options.f_max_mhz) {
            kept.push_back(j);
            map.omega.push_back(kTwoPi * axis.frequency[j]);
        }
    }
    map.t_ns.resize(rows.size());
    map.tau_span_ns.resize(rows.size());
    map.magnitudes.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(kept.size()));

    parallel_for(
        rows.size(),
        [&](std::size_t r) {
            const std::size_t i = rows[r];
            const auto col = grid.values.col(static_cast<Eigen::Index>(i));
            std::vector<std::complex<double>> g(n - i);
            for (std::size_t k = 0; k < g.size(); ++k) {
                // G(t, t+τ) = conj G(t+τ, t): read down the column.
                auto v = std::conj(col(static_cast<Eigen::Index>(i + k)));
                double w = dt;
                if (k == 0)
                    w *= 0.5;
                if (options.apodization_ns > 0.0)
                    w *= std::exp(-static_cast<double>(k) * dt / options.apodization_ns);
                g[k] = w * v;
            }
            const auto bins = transform_positive(g, nfft);
            for (std::size_t c = 0; c < kept.size(); ++c)
                map.magnitudes(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                    std::abs(bins[axis.order[kept[c]]]);
            map.t_ns[r] = grid.grid.time(i);
            map.tau_span_ns[r] = static_cast<double>(n - 1 - i) * dt;
        },
        options.threads);
    return map;
}

Spectrum steady_psd(const TwoTimeGrid& grid, double t_a, double t_b, IpsdOptions options)
{
    if (!(t_a <= t_b) || t_a < 0.0 || t_b > grid.grid.end() + 1e-9)
        throw std::invalid_argument("steady window must lie inside the correlation grid");
    const double dt = grid.grid.dt;
    options.row_begin = static_cast<std::size_t>(std::ceil(t_a / dt - 1e-9));
    options.row_end = static_cast<std::size_t>(std::floor(t_b / dt + 1e-9)) + 1;
    if (options.row_begin >= options.row_end || options.row_begin >= grid.grid.size)
        throw std::invalid_argument("steady window contains no grid rows");
    const auto map = ipsd(grid, options);
    if (map.t_ns.empty())
        throw std::invalid_argument("steady window contains no grid rows");

    Spectrum s;
    s.freq_mhz.resize(map.omega.size());
    s.magnitudes.assign(map.omega.size(), 0.0);
    for (std::size_t c = 0; c < map.omega.size(); ++c) {
        s.freq_mhz[c] = angular_to_mhz(map.omega[c]);
        s.magnitudes[c] = map.magnitudes.col(static_cast<Eigen::Index>(c)).mean();
    }
    const std::size_t nfft = next_power_of_two(grid.grid.size * static_cast<std::size_t>(options.zero_pad));
    s.bin_mhz = 1.0e3 / (static_cast<double>(nfft) * dt);
    // The shortest τ span in the window limits the resolution.
    s.resolution_mhz = 1.0e3 / std::max(dt, map.tau_span_ns.back());
    return s;
}

} // namespace wqed
