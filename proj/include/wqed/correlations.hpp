#pragma once

#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

#include "wqed/core_model.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/spectra.hpp"

namespace wqed {

/// Uniform time grid starting at t = 0.
struct TimeGrid {
    double dt = 0.0;
    std::size_t size = 0;

    double time(std::size_t i) const { return static_cast<double>(i) * dt; }
    double end() const { return size == 0 ? 0.0 : time(size - 1); }
};

/// One propagator per grid slice [t_k, t_k+1], with the envelope frozen at
/// its slice average. Slices with equal drive share one matrix, so a
/// rectangular pulse costs two exponentials. Immutable after construction.
class PropagatorCache {
public:
    PropagatorCache(const BlochRates& rates, const PulseEnvelope& envelope, const TimeGrid& grid);

    std::size_t slices() const { return slice_index_.size(); }
    const Superoperator& slice(std::size_t k) const { return unique_[slice_index_[k]]; }
    std::size_t unique_count() const { return unique_.size(); }

private:
    std::vector<Superoperator> unique_;
    std::vector<std::size_t> slice_index_;
};

/// ⟨σ₊(t₁)σ₋(t₂)⟩ on a grid together with the single-time expectation values
/// propagated by the same slices (so the two are mutually consistent).
struct CorrelatorResult {
    TimeGrid grid;
    Eigen::MatrixXcd values;
    BlochTrace single_time;
};

/// Quantum regression: for t₂ ≥ t₁ evolve ρ(t₁)σ₊ from t₁ to t₂ and take
/// Tr[σ₋ ·]; the t₂ < t₁ half follows from Hermitian symmetry. The grid
/// step must equal the envelope step.
CorrelatorResult two_time_correlator(const ModelParams& params, const PulseEnvelope& envelope,
                                     const TimeGrid& grid, unsigned threads = 0);
CorrelatorResult two_time_correlator(const BlochRates& rates, const PulseEnvelope& envelope,
                                     const TimeGrid& grid, BlochState initial,
                                     unsigned threads = 0);

/// Bytes held by an n × n correlator plus the incoherent grid derived from it.
std::size_t correlation_memory_bytes(std::size_t n);

/// Incoherent first-order correlation, scaled by V₀²Γ₁/2.
struct TwoTimeGrid {
    TimeGrid grid;
    Eigen::MatrixXcd values;
};

/// G(t₁,t₂) = (V₀²Γ₁/2)·(⟨σ₊(t₁)σ₋(t₂)⟩ − ⟨σ₊(t₁)⟩⟨σ₋(t₂)⟩)
TwoTimeGrid g1_incoherent(const Eigen::MatrixXcd& two_time, const BlochTrace& trace, double v0,
                          double gamma1);
TwoTimeGrid g1_incoherent(const CorrelatorResult& correlator, double v0, double gamma1);

struct IpsdOptions {
    /// Reported band |f| ≤ f_max.
    double f_max_mhz = 100.0;
    int zero_pad = 4;
    /// Exponential apodisation time of the τ integrand; 0 disables it.
    double apodization_ns = 0.0;
    std::size_t row_begin = 0;
    std::size_t row_end = static_cast<std::size_t>(-1);
    std::size_t row_stride = 1;
    unsigned threads = 0;
};

/// Instantaneous PSD |∫₀^∞ G(t,t+τ)·e^{+iωτ}dτ| per row t, with the same
/// frequency sign convention as trace_spectrum.
struct IpsdMap {
    std::vector<double> t_ns;
    /// Angular frequency (rad/ns) relative to the carrier.
    std::vector<double> omega;
    /// rows: t, columns: omega
    Eigen::MatrixXd magnitudes;
    /// τ span available to each row; its inverse is the row's resolution.
    std::vector<double> tau_span_ns;
};

/// Rectangle rule over τ ≥ 0 with half weight at τ = 0; τ runs to the end of
/// the grid.
IpsdMap ipsd(const TwoTimeGrid& grid, const IpsdOptions& options = {});

/// IPSD averaged over rows t_a ≤ t ≤ t_b.
Spectrum steady_psd(const TwoTimeGrid& grid, double t_a, double t_b, IpsdOptions options = {});

} // namespace wqed
