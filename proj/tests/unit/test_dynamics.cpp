#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "wqed/dynamics.hpp"
#include "wqed/errors.hpp"
#include "wqed/units.hpp"

using namespace wqed;
using cd = std::complex<double>;

namespace {

BlochState rk4_constant(const BlochRates& r, BlochState s, double t, double dt)
{
    const auto env = cosine_taper(t + 10.0 * dt + 1.0, 0.0, dt);
    const auto tr = integrate(r, env, env.duration(), s);
    return tr.states[static_cast<std::size_t>(std::llround(t / dt))];
}

} // namespace

TEST(BlochDerivative, BasicExamples)
{
    const double w = 0.3;
    auto d = bloch_derivative(BlochState::ground(), w, 0.0, 0.0, 0.0);
    EXPECT_EQ(d.sx, 0.0);
    EXPECT_EQ(d.sy, w);
    EXPECT_EQ(d.sz, 0.0);
    d = bloch_derivative(BlochState::ground(), 0.0, 0.1, 0.05, 0.07);
    EXPECT_EQ(d.sx, 0.0);
    EXPECT_EQ(d.sy, 0.0);
    EXPECT_EQ(d.sz, 0.0);
    d = bloch_derivative(BlochState::excited(), 0.0, 0.0, 0.05, 0.025);
    EXPECT_DOUBLE_EQ(d.sz, 2.0 * 0.05);
    // dP_e/dt = −ṡz/2 = −Γ₁ at sz = −1
    EXPECT_DOUBLE_EQ(-0.5 * d.sz, -0.05);
}

TEST(BlochDerivative, FormulaOnRandomStates)
{
    gen::Source g(21);
    for (int i = 0; i < 100; ++i) {
        const auto s = g.state();
        const double w = g.uniform(0, 1), det = g.uniform(-1, 1), g1 = g.uniform(0, 0.1), g2 = g.uniform(0, 0.1);
        const auto d = bloch_derivative(s, w, det, g1, g2);
        EXPECT_DOUBLE_EQ(d.sx, -det * s.sy - g2 * s.sx);
        EXPECT_DOUBLE_EQ(d.sy, det * s.sx + w * s.sz - g2 * s.sy);
        EXPECT_DOUBLE_EQ(d.sz, -w * s.sy + g1 * (1.0 - s.sz));
    }
}

TEST(Integrate, UndampedRabiCycle)
{
    const double rabi = mhz_to_angular(19.8);
    const double span = 5.0 * kTwoPi / rabi;
    const auto env = cosine_taper(span + 5.0, 0.0, 0.05);
    const auto tr = integrate(BlochRates{rabi, 0, 0, 0}, env, env.duration());
    for (std::size_t i = 0; i < tr.size() && tr.time(i) <= span; ++i) {
        ASSERT_NEAR(tr.states[i].sz, std::cos(rabi * tr.time(i)), 1e-6);
        ASSERT_NEAR(tr.states[i].sy, std::sin(rabi * tr.time(i)), 1e-6);
        ASSERT_NEAR(tr.states[i].sx, 0.0, 1e-12);
    }
}

TEST(Integrate, FreeDecayFromExcited)
{
    const auto p = ModelParams::from_mhz(0.0, 0.9, 0.6, 0.0);
    const auto env = cosine_taper(100.0, 0.0, 0.1);
    const auto tr = integrate(BlochRates::from(p), env, 400.0, BlochState::excited());
    for (std::size_t i = 0; i < tr.size(); i += 10)
        ASSERT_NEAR(tr.states[i].excited_population(), std::exp(-p.gamma1 * tr.time(i)), 1e-9);
}

TEST(Integrate, FreeDecayCoherenceRate)
{
    // After the pulse |⟨σ₋⟩| ∝ e^{−Γ₂t}; fit the log-slope.
    const auto p = ModelParams::from_mhz(19.8, 0.9, 0.6, 5.0);
    const auto env = cosine_taper(30.0, 0.02, 0.1);
    const auto tr = integrate(p, env, 300.0);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        const double t = tr.time(i);
        if (t < 40.0)
            continue;
        const double y = std::log(std::abs(tr.sigma_minus[i]));
        sx += t, sy += y, sxx += t * t, sxy += t * y;
        ++n;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    // Population relaxation feeds back into coherence only through the drive,
    // which is off here.
    EXPECT_NEAR(-slope, p.gamma2(), 0.01 * p.gamma2());
}

TEST(Integrate, ConvergesToSteadyState)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(3000.0, 0.0, 0.1);
    const auto tr = integrate(p, env, 3000.0);
    const auto ss = steady_state(p.rabi_peak, p.detuning, p.gamma1, p.gamma2());
    const auto& last = tr.states.back();
    EXPECT_NEAR(last.sx, ss.sx, 1e-6);
    EXPECT_NEAR(last.sy, ss.sy, 1e-6);
    EXPECT_NEAR(last.sz, ss.sz, 1e-6);
}

TEST(Integrate, RefusesCoarseStep)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(120.0, 0.02, 2.0);
    try {
        integrate(p, env, 120.0);
        FAIL() << "expected refusal";
    } catch (const std::invalid_argument& e) {
        EXPECT_NE(std::string(e.what()).find("dt_ns"), std::string::npos);
    }
    EXPECT_THROW(integrate(p, cosine_taper(120.0, 0.02, 0.1), 100.0), std::invalid_argument);
}

TEST(Integrate, ConvergenceOrderIsFour)
{
    const auto r = BlochRates::from(ModelParams::from_mhz(19.8, 0.9, 0.6, 7.0));
    const double t = kTwoPi / r.rabi_peak;
    const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
    const auto exact = from_density_vector(propagator(l, t) * to_density_vector(BlochState::ground()));
    auto err = [&](double dt) {
        const auto s = rk4_constant(r, BlochState::ground(), t, dt);
        return std::sqrt(std::pow(s.sx - exact.sx, 2) + std::pow(s.sy - exact.sy, 2) + std::pow(s.sz - exact.sz, 2));
    };
    const double coarse = t / 60.0, fine = t / 120.0;
    const double ratio = err(coarse) / err(fine);
    EXPECT_GT(ratio, 13.0);
    EXPECT_LT(ratio, 19.0);
}

TEST(Integrate, BlochNormNeverGrows)
{
    gen::Source g(4);
    for (int trial = 0; trial < 10; ++trial) {
        const auto p = g.params();
        const auto env = cosine_taper(200.0, 0.1, 0.05);
        const auto tr = integrate(p, env, 300.0);
        for (std::size_t i = 0; i < tr.size(); ++i)
            ASSERT_LE(tr.states[i].norm_squared(), 1.0 + 1e-9);
        // Free relaxation only brings the vector closer to the ground state.
        auto distance = [](const BlochState& s) { return s.sx * s.sx + s.sy * s.sy + (1 - s.sz) * (1 - s.sz); };
        for (std::size_t i = 1; i < tr.size(); ++i)
            if (tr.time(i) > 200.0)
                ASSERT_LE(distance(tr.states[i]), distance(tr.states[i - 1]) + 1e-12);
    }
}

TEST(Integrate, SigmaMinusConvention)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(120.0, 0.02, 0.1);
    const auto tr = integrate(p, env, 200.0);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        ASSERT_EQ(tr.sigma_minus[i], tr.states[i].sigma_minus());
        ASSERT_LE(std::abs(tr.sigma_minus[i]), 0.5 + 1e-12);
    }
    // The φ = 0 convention keeps e^{iφ}⟨σ₋⟩ unchanged.
    auto q = p;
    q.field_phase = FieldPhase::Zero;
    const auto tz = integrate(q, env, 200.0);
    for (std::size_t i = 0; i < tr.size(); i += 7)
        ASSERT_NEAR(std::abs(phase_factor(FieldPhase::Zero) * tz.sigma_minus[i] -
                             phase_factor(FieldPhase::HalfPi) * tr.sigma_minus[i]),
                    0.0, 1e-15);
    EXPECT_EQ(tz.convention, FieldPhase::Zero);
}

TEST(Convention, RoundTrip)
{
    gen::Source g(9);
    for (int i = 0; i < 20; ++i) {
        const auto s = g.state();
        for (auto ph : {FieldPhase::Zero, FieldPhase::HalfPi}) {
            const auto back = from_convention(to_convention(s, ph), ph);
            EXPECT_DOUBLE_EQ(back.sx, s.sx);
            EXPECT_DOUBLE_EQ(back.sy, s.sy);
            EXPECT_DOUBLE_EQ(back.sz, s.sz);
        }
    }
}

TEST(SteadyState, ResonantClosedForm)
{
    const auto p = ModelParams::reference();
    const auto s = steady_state(p.rabi_peak, 0.0, p.gamma1, p.gamma2());
    const double g12 = p.gamma1 * p.gamma2();
    EXPECT_NEAR(s.sz, g12 / (g12 + p.rabi_peak * p.rabi_peak), 1e-14);
    const auto off = steady_state(0.0, 0.3, p.gamma1, p.gamma2());
    EXPECT_NEAR(off.sz, 1.0, 1e-15);
    EXPECT_NEAR(off.sx, 0.0, 1e-15);
    const auto sat = steady_state(1e4, 0.0, p.gamma1, p.gamma2());
    EXPECT_NEAR(sat.excited_population(), 0.5, 1e-6);
    EXPECT_THROW(steady_state(0.1, 0.0, 0.0, 0.1), std::invalid_argument);
    EXPECT_THROW(steady_state(0.1, 0.0, 0.1, 0.0), std::invalid_argument);
}

TEST(SteadyState, MatchesCramerAndLiouvillianKernel)
{
    gen::Source g(13);
    for (int i = 0; i < 30; ++i) {
        const auto r = g.rates();
        const auto s = steady_state(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        // Cramer's rule on the stationarity system
        const double a[3][3] = {{-r.gamma2, -r.detuning, 0},
                                {r.detuning, -r.gamma2, r.rabi_peak},
                                {0, -r.rabi_peak, -r.gamma1}};
        const double b[3] = {0, 0, -r.gamma1};
        auto det3 = [](const double m[3][3]) {
            return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                   m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                   m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        };
        const double d = det3(a);
        double x[3];
        for (int c = 0; c < 3; ++c) {
            double m[3][3];
            for (int row = 0; row < 3; ++row)
                for (int col = 0; col < 3; ++col)
                    m[row][col] = col == c ? b[row] : a[row][col];
            x[c] = det3(m) / d;
        }
        EXPECT_NEAR(s.sx, x[0], 1e-10);
        EXPECT_NEAR(s.sy, x[1], 1e-10);
        EXPECT_NEAR(s.sz, x[2], 1e-10);

        const Eigen::Matrix4cd l = oracle::generator(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        Eigen::FullPivLU<Eigen::Matrix4cd> lu(l);
        ASSERT_EQ(lu.dimensionOfKernel(), 1);
        Eigen::Vector4cd k = lu.kernel().col(0);
        k /= (k(vec_index::gg) + k(vec_index::ee));
        const auto ks = from_density_vector(k);
        EXPECT_NEAR(ks.sx, s.sx, 1e-9);
        EXPECT_NEAR(ks.sy, s.sy, 1e-9);
        EXPECT_NEAR(ks.sz, s.sz, 1e-9);
    }
}

TEST(Liouvillian, MatchesKroneckerConstruction)
{
    gen::Source g(17);
    for (int i = 0; i < 20; ++i) {
        const auto r = g.rates();
        const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        const auto ref = oracle::generator(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        EXPECT_LT((l.generator - ref).cwiseAbs().maxCoeff(), 1e-14);
    }
}

TEST(Liouvillian, TracePreservingAndHermiticity)
{
    gen::Source g(19);
    for (int i = 0; i < 20; ++i) {
        const auto r = g.rates();
        const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2).generator;
        // Tr row: (1, 0, 0, 1)·L = 0
        const Eigen::RowVector4cd tr(1, 0, 0, 1);
        EXPECT_LT((tr * l).cwiseAbs().maxCoeff(), 1e-14);
        const auto rho = to_density_vector(g.state());
        const Eigen::Vector4cd d = l * rho;
        EXPECT_NEAR(d(vec_index::gg).imag(), 0.0, 1e-14);
        EXPECT_NEAR(d(vec_index::ee).imag(), 0.0, 1e-14);
        EXPECT_NEAR(std::abs(d(vec_index::ge) - std::conj(d(vec_index::eg))), 0.0, 1e-14);
    }
}

TEST(Liouvillian, ReproducesBlochEquations)
{
    gen::Source g(23);
    for (int i = 0; i < 20; ++i) {
        const auto r = g.rates();
        const auto s = g.state();
        const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2).generator;
        const Eigen::Vector4cd d = l * to_density_vector(s);
        const auto want = bloch_derivative(s, r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        // linear map: ds = 2·Re/Im of dρ_eg, dsz = dρ_gg − dρ_ee
        EXPECT_NEAR(2.0 * d(vec_index::eg).real(), want.sx, 1e-13);
        EXPECT_NEAR(2.0 * d(vec_index::eg).imag(), want.sy, 1e-13);
        EXPECT_NEAR((d(vec_index::gg) - d(vec_index::ee)).real(), want.sz, 1e-13);
    }
}

TEST(Propagator, IdentityCompositionAndDecay)
{
    const auto l = Liouvillian::build(0.2, 0.05, 0.01, 0.02);
    EXPECT_LT((propagator(l, 0.0) - Superoperator::Identity()).cwiseAbs().maxCoeff(), 0.0 + 1e-300);
    const Superoperator ab = propagator(l, 3.7 + 1.9);
    const Superoperator ba = propagator(l, 1.9) * propagator(l, 3.7);
    EXPECT_LT((ab - ba).cwiseAbs().maxCoeff(), 1e-12);

    const double g1 = 0.0057;
    const auto free = Liouvillian::build(0.0, 0.0, g1, 0.6 * g1);
    DensityVector e = DensityVector::Zero();
    e(vec_index::ee) = 1.0;
    for (double t : {0.5, 10.0, 250.0}) {
        const DensityVector out = propagator(free, t) * e;
        EXPECT_NEAR(out(vec_index::ee).real(), std::exp(-g1 * t), 1e-13);
    }
    EXPECT_THROW(propagator(l, -1.0), std::invalid_argument);
    EXPECT_THROW(propagator(l, std::nan("")), std::invalid_argument);
    Superoperator bad = l.generator;
    bad(0, 0) = std::nan("");
    EXPECT_THROW(propagator(bad, 1.0), std::invalid_argument);
}

TEST(Propagator, AgreesWithRk4)
{
    gen::Source g(29);
    for (int i = 0; i < 10; ++i) {
        const auto r = g.rates();
        const double t = g.uniform(5.0, 100.0);
        const double dt = 0.005;
        const double tt = std::round(t / dt) * dt;
        const auto rk = rk4_constant(r, BlochState::ground(), tt, dt);
        const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        const auto ex = from_density_vector(propagator(l, tt) * to_density_vector(BlochState::ground()));
        EXPECT_NEAR(rk.sx, ex.sx, 1e-8);
        EXPECT_NEAR(rk.sy, ex.sy, 1e-8);
        EXPECT_NEAR(rk.sz, ex.sz, 1e-8);
    }
}

TEST(Propagator, TracePreservation)
{
    gen::Source g(31);
    for (int i = 0; i < 20; ++i) {
        const auto r = g.rates();
        const auto l = Liouvillian::build(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        DensityVector rho = to_density_vector(g.state());
        const auto step = propagator(l, g.uniform(0.01, 5.0));
        for (int k = 0; k < 200; ++k)
            rho = step * rho;
        EXPECT_NEAR((rho(vec_index::gg) + rho(vec_index::ee)).real(), 1.0, 1e-9);
        EXPECT_NEAR((rho(vec_index::gg) + rho(vec_index::ee)).imag(), 0.0, 1e-9);
    }
}

TEST(DensityVector, RoundTrip)
{
    gen::Source g(37);
    for (int i = 0; i < 20; ++i) {
        const auto s = g.state();
        const auto back = from_density_vector(to_density_vector(s));
        EXPECT_NEAR(back.sx, s.sx, 1e-15);
        EXPECT_NEAR(back.sy, s.sy, 1e-15);
        EXPECT_NEAR(back.sz, s.sz, 1e-15);
        EXPECT_EQ(to_density_vector(s)(vec_index::eg), s.sigma_minus());
    }
}
