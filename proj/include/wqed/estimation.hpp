#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "wqed/core_model.hpp"
#include "wqed/measurement.hpp"
#include "wqed/spectra.hpp"

namespace wqed {

/// Box constraints. Rates are angular (rad/ns) like ModelParams; the qubit
/// offset is in MHz and shifts the true qubit above the nominal one.
struct FitBounds {
    std::pair<double, double> offset_mhz{-5.0, 5.0};
    std::pair<double, double> rabi{0.0, 0.0};
    std::pair<double, double> gamma1{0.0, 0.0};
    std::pair<double, double> gamma_phi{0.0, 0.0};

    /// Rates within [value/factor, value·factor], offset within ±offset_span.
    static FitBounds around(const ModelParams& guess, double factor = 2.0,
                            double offset_span_mhz = 5.0);
};

struct FitProblem {
    /// Radiation traces on the simulation grid, rows labelled by the nominal
    /// detuning (drive minus nominal qubit frequency).
    ScanResult data;
    /// Its qubit_frequency_ghz is the nominal frequency the rows refer to.
    ModelParams initial_guess;
    FitBounds bounds;
    /// One per row; empty means all ones.
    std::vector<double> weights;
    PulseEnvelope envelope;
    /// When set, model traces go through the noiseless part of this chain
    /// so they stay comparable with filtered data.
    std::optional<ChainConfig> model_chain;
    double v0 = 1.0;
    unsigned threads = 0;
    int max_iterations = 2000;

    /// Throws std::invalid_argument when the problem is malformed.
    void validate() const;
};

struct FitUncertainty {
    double offset_mhz = 0.0;
    double rabi = 0.0;
    double gamma1 = 0.0;
    double gamma_phi = 0.0;
};

struct FitResult {
    ModelParams params;
    double qubit_offset_mhz = 0.0;
    /// Square root of the objective at the solution.
    double residual_norm = 0.0;
    double objective = 0.0;
    FitUncertainty uncertainty;
    int iterations = 0;
    bool converged = false;
    /// |Jᵀr| / (|J|·|r|) at the solution.
    double gradient_norm = 0.0;
    /// Best objective after each iteration.
    std::vector<double> log;
};

/// Objective in the optimizer's coordinates
/// x = (offset MHz, ln Ω_R, ln Γ₁, ln γ_φ).
class FitObjective {
public:
    static constexpr std::size_t dims = 4;
    using Point = std::array<double, dims>;

    explicit FitObjective(const FitProblem& problem);

    Point to_point(const ModelParams& params, double offset_mhz) const;
    /// Parameters for a point; detuning is left at zero.
    ModelParams to_params(const Point& x) const;
    double offset_of(const Point& x) const { return x[0]; }

    Point lower() const { return lower_; }
    Point upper() const { return upper_; }
    Point clamp(Point x) const;

    /// Model radiation for one data row.
    FieldTrace model_row(const Point& x, std::size_t row) const;
    /// Stacked √w·(model − data), real and imaginary parts interleaved.
    Eigen::VectorXd residuals(const Point& x) const;
    double value(const Point& x) const;
    /// Central-difference Jacobian of residuals().
    Eigen::MatrixXd jacobian(const Point& x, double step = 1e-5) const;
    /// Gauss–Newton model gradient 2·Jᵀr.
    Eigen::VectorXd model_gradient(const Point& x) const;

    std::size_t evaluations() const { return evaluations_; }

private:
    const FitProblem& problem_;
    Point lower_{};
    Point upper_{};
    std::vector<double> weights_;
    mutable std::size_t evaluations_ = 0;
};

/// Σ_rows w·Σ_t |model − data|² for the given parameters and offset.
double residual(const FitProblem& problem, const ModelParams& params, double offset_mhz = 0.0);

/// Σ_rows w·Σ_t |model − data|² for precomputed model traces.
double trace_objective(std::span<const FieldTrace> model, std::span<const FieldTrace> data,
                       std::span<const double> weights);

FitResult fit(const FitProblem& problem);

/// Radiation scan at `truth`, optionally passed through the measurement
/// chain with one noise stream per row. When the chain has no reference
/// power the peak power over all rows is used.
ScanResult synthetic_scan(const ModelParams& truth, const PulseEnvelope& envelope,
                          std::span<const double> detuning_mhz, double t_end,
                          const std::optional<ChainConfig>& chain, double v0 = 1.0,
                          unsigned threads = 0);

} // namespace wqed
