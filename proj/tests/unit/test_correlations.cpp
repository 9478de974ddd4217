#include <cmath>
#include <complex>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <gtest/gtest.h>

#include "generators.hpp"
#include "oracles.hpp"
#include "wqed/correlations.hpp"
#include "wqed/fields.hpp"
#include "wqed/units.hpp"

using namespace wqed;
using cd = std::complex<double>;

namespace {

TimeGrid grid_for(double span, double dt)
{
    return {dt, static_cast<std::size_t>(std::llround(span / dt)) + 1};
}

double max_abs(const Eigen::MatrixXcd& m)
{
    return m.cwiseAbs().maxCoeff();
}

} // namespace

TEST(Correlator, EqualTimeIsExcitedPopulation)
{
    const auto p = ModelParams::from_mhz(19.8, 0.9, 0.6, 3.0);
    const auto env = cosine_taper(120.0, 0.0, 0.1);
    // The two methods discretise the switch-off differently, so stop at it.
    const auto grid = grid_for(120.0, 0.1);
    const auto c = two_time_correlator(p, env, grid);
    const auto rk = integrate(p, env, 120.0);
    for (std::size_t i = 0; i < grid.size; ++i) {
        ASSERT_NEAR(c.values(i, i).real(), rk.states[i].excited_population(), 1e-8) << i;
        ASSERT_NEAR(c.values(i, i).imag(), 0.0, 1e-12);
        ASSERT_NEAR(c.single_time.states[i].sz, rk.states[i].sz, 2e-8);
    }
}

TEST(Correlator, UndrivenExcitedAtomClosedForm)
{
    for (double det_mhz : {0.0, 6.0}) {
        const auto r = BlochRates{0.0, mhz_to_angular(det_mhz), mhz_to_angular(0.9), mhz_to_angular(1.05)};
        const auto env = cosine_taper(10.0, 0.0, 0.1);
        const auto grid = grid_for(150.0, 0.1);
        const auto c = two_time_correlator(r, env, grid, BlochState::excited());
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size; i += 7)
            for (std::size_t j = i; j < grid.size; j += 5) {
                const double t1 = grid.time(i), tau = grid.time(j) - t1;
                const cd want = std::exp(-r.gamma1 * t1) * std::exp(cd(-r.gamma2, r.detuning) * tau);
                worst = std::max(worst, std::abs(c.values(i, j) - want));
            }
        EXPECT_LT(worst, 1e-8) << det_mhz;
    }
}

TEST(Correlator, ConstantDriveMatchesSingleExponential)
{
    gen::Source g(81);
    for (int trial = 0; trial < 3; ++trial) {
        const auto r = g.rates();
        const auto env = cosine_taper(100.0, 0.0, 0.1);
        const auto grid = grid_for(80.0, 0.1);
        const auto c = two_time_correlator(r, env, grid, BlochState::ground());
        const Eigen::Matrix4cd l = oracle::generator(r.rabi_peak, r.detuning, r.gamma1, r.gamma2);
        Eigen::Matrix2cd rho0 = Eigen::Matrix2cd::Zero();
        rho0(0, 0) = 1.0;
        const Eigen::Matrix2cd sp = oracle::sigma_minus().adjoint();
        double worst = 0.0;
        for (std::size_t i = 0; i < grid.size; i += 40) {
            const Eigen::Matrix4cd a = (l * grid.time(i)).exp();
            const Eigen::Matrix2cd rho = oracle::unvec(a * oracle::vec(rho0));
            const Eigen::Vector4cd x = oracle::vec(rho * sp);
            for (std::size_t j = i; j < grid.size; j += 37) {
                const Eigen::Matrix4cd b = (l * (grid.time(j) - grid.time(i))).exp();
                const cd want = (oracle::sigma_minus() * oracle::unvec(b * x)).trace();
                worst = std::max(worst, std::abs(c.values(i, j) - want));
            }
        }
        EXPECT_LT(worst, 1e-8);
    }
}

TEST(Correlator, HermitianAndPositiveSemidefinite)
{
    gen::Source g(83);
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(120.0, 0.02, 0.2);
    const auto grid = grid_for(250.0, 0.2);
    const auto c = two_time_correlator(p, env, grid);
    EXPECT_LT(max_abs(c.values - c.values.adjoint()), 1e-9);
    const auto gi = g1_incoherent(c, 1.0, p.gamma1);
    EXPECT_LT(max_abs(gi.values - gi.values.adjoint()), 1e-9);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Eigen::Index> idx;
        for (int k = 0; k < 20; ++k)
            idx.push_back(static_cast<Eigen::Index>(g.integer(0, static_cast<int>(grid.size) - 1)));
        for (const auto* m : {&c.values, &gi.values}) {
            Eigen::MatrixXcd sub(20, 20);
            for (int a = 0; a < 20; ++a)
                for (int b = 0; b < 20; ++b)
                    sub(a, b) = (*m)(idx[a], idx[b]);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sub);
            const auto ev = es.eigenvalues();
            EXPECT_GE(ev.minCoeff(), -1e-6 * std::max(ev.maxCoeff(), 1e-300));
        }
    }
}

TEST(Correlator, IncoherentDiagonal)
{
    const auto p = ModelParams::from_mhz(19.8, 0.9, 0.6, -5.0);
    const auto env = cosine_taper(120.0, 0.02, 0.2);
    const auto grid = grid_for(200.0, 0.2);
    const auto c = two_time_correlator(p, env, grid);
    const double v0 = 1.7;
    const auto gi = g1_incoherent(c, v0, p.gamma1);
    for (std::size_t i = 0; i < grid.size; ++i) {
        const auto& s = c.single_time.states[i];
        const double want = 0.5 * v0 * v0 * p.gamma1 * (s.excited_population() - std::norm(s.sigma_minus()));
        ASSERT_NEAR(gi.values(i, i).real(), want, 1e-12);
        ASSERT_GE(gi.values(i, i).real(), -1e-12);
    }
    BlochTrace wrong = c.single_time;
    wrong.states.pop_back();
    wrong.sigma_minus.pop_back();
    EXPECT_THROW(g1_incoherent(c.values, wrong, 1.0, p.gamma1), std::invalid_argument);
}

TEST(Correlator, NoDriveGivesZeroIncoherentGrid)
{
    const auto p = ModelParams::from_mhz(0.0, 0.9, 0.6, 0.0);
    const auto env = cosine_taper(120.0, 0.02, 0.2);
    const auto grid = grid_for(200.0, 0.2);
    const auto gi = g1_incoherent(two_time_correlator(p, env, grid), 1.0, p.gamma1);
    EXPECT_EQ(max_abs(gi.values), 0.0);
    const auto map = ipsd(gi);
    EXPECT_EQ(map.magnitudes.maxCoeff(), 0.0);
    const auto s = steady_psd(gi, 150.0, 190.0);
    EXPECT_EQ(*std::max_element(s.magnitudes.begin(), s.magnitudes.end()), 0.0);
}

TEST(Correlator, StationaryUnderLongDrive)
{
    const auto r = BlochRates::from(ModelParams::from_mhz(19.8, 5.0, 1.0, 0.0));
    const auto env = cosine_taper(400.0, 0.0, 0.2);
    const auto grid = grid_for(400.0, 0.2);
    const auto c = two_time_correlator(r, env, grid, BlochState::ground());
    const std::size_t a = 1250, b = 1500, span = 400;
    double peak = 0.0, dev = 0.0;
    for (std::size_t k = 0; k < span; ++k) {
        peak = std::max(peak, std::abs(c.values(a, a + k)));
        dev = std::max(dev, std::abs(c.values(a, a + k) - c.values(b, b + k)));
    }
    EXPECT_LT(dev / peak, 0.02);
}

TEST(Correlator, CacheSharesEqualSlices)
{
    const auto r = BlochRates::from(ModelParams::reference());
    const auto grid = grid_for(200.0, 0.1);
    const PropagatorCache rect(r, cosine_taper(120.0, 0.0, 0.1), grid);
    EXPECT_EQ(rect.slices(), grid.size - 1);
    EXPECT_LE(rect.unique_count(), 3u);
    const PropagatorCache taper(r, cosine_taper(120.0, 0.1, 0.1), grid);
    EXPECT_GT(taper.unique_count(), 10u);
    EXPECT_LT(taper.unique_count(), 200u);
}

TEST(Correlator, DeterministicAcrossThreadCounts)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(120.0, 0.02, 0.2);
    const auto grid = grid_for(200.0, 0.2);
    const auto a = two_time_correlator(p, env, grid, 1);
    const auto b = two_time_correlator(p, env, grid, 3);
    EXPECT_TRUE(a.values == b.values);
    const auto ga = g1_incoherent(a, 1.0, p.gamma1);
    IpsdOptions o;
    o.threads = 1;
    const auto m1 = ipsd(ga, o);
    o.threads = 3;
    EXPECT_TRUE(m1.magnitudes == ipsd(ga, o).magnitudes);
}

TEST(Correlator, RejectsMisalignedGrid)
{
    const auto p = ModelParams::reference();
    EXPECT_THROW(two_time_correlator(p, cosine_taper(120.0, 0.02, 0.1), grid_for(200.0, 0.2)),
                 std::invalid_argument);
    EXPECT_THROW(two_time_correlator(p, cosine_taper(120.0, 0.02, 0.1), TimeGrid{0.1, 0}),
                 std::invalid_argument);
    EXPECT_EQ(correlation_memory_bytes(1000), 2u * 1000u * 1000u * sizeof(cd));
}

TEST(Ipsd, DrivenRowsShowTripletAndDecayShowsCentrePeak)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(400.0, 0.02, 0.2);
    const auto grid = grid_for(700.0, 0.2);
    const auto gi = g1_incoherent(two_time_correlator(p, env, grid), 1.0, p.gamma1);
    IpsdOptions o;
    o.f_max_mhz = 60.0;
    o.row_stride = 250;
    const auto map = ipsd(gi, o);
    ASSERT_FALSE(map.t_ns.empty());
    EXPECT_GE(map.magnitudes.minCoeff(), 0.0);

    auto row_spectrum = [&](double t) {
        const auto it = std::find_if(map.t_ns.begin(), map.t_ns.end(), [&](double x) { return x >= t - 1e-9; });
        const auto r = static_cast<Eigen::Index>(it - map.t_ns.begin());
        Spectrum s;
        for (std::size_t c = 0; c < map.omega.size(); ++c) {
            s.freq_mhz.push_back(angular_to_mhz(map.omega[c]));
            s.magnitudes.push_back(map.magnitudes(r, static_cast<Eigen::Index>(c)));
        }
        return s;
    };

    // A row late in the drive sees a steady correlation until the pulse ends.
    auto peaks = find_peaks(row_spectrum(250.0), 3, 0.05);
    ASSERT_EQ(peaks.size(), 3u);
    std::vector<double> f;
    for (const auto& pk : peaks)
        f.push_back(pk.freq_mhz);
    std::sort(f.begin(), f.end());
    EXPECT_NEAR(f[0], -19.8, 1.0);
    EXPECT_NEAR(f[1], 0.0, 1.0);
    EXPECT_NEAR(f[2], 19.8, 1.0);

    const auto post = row_spectrum(450.0);
    peaks = find_peaks(post, 5, 0.05);
    ASSERT_FALSE(peaks.empty());
    EXPECT_NEAR(peaks[0].freq_mhz, 0.0, 1.0);
    for (std::size_t k = 1; k < peaks.size(); ++k)
        EXPECT_LT(std::abs(peaks[k].freq_mhz), 10.0);
}

TEST(Ipsd, SteadyPsdMatchesMollowSidebands)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(600.0, 0.02, 0.2);
    const auto grid = grid_for(600.0, 0.2);
    const auto gi = g1_incoherent(two_time_correlator(p, env, grid), 1.0, p.gamma1);
    IpsdOptions o;
    o.f_max_mhz = 60.0;
    const auto s = steady_psd(gi, 300.0, 400.0, o);
    const auto peaks = find_peaks(s, 3, 0.05);
    ASSERT_EQ(peaks.size(), 3u);
    std::vector<double> f;
    for (const auto& pk : peaks)
        f.push_back(pk.freq_mhz);
    std::sort(f.begin(), f.end());
    EXPECT_NEAR(f[0], -19.8, s.resolution_mhz);
    EXPECT_NEAR(f[2], 19.8, s.resolution_mhz);
    EXPECT_THROW(steady_psd(gi, 400.0, 300.0), std::invalid_argument);
    EXPECT_THROW(steady_psd(gi, 500.0, 700.0), std::invalid_argument);
    EXPECT_THROW(steady_psd(gi, 100.05, 100.05), std::invalid_argument);
}

TEST(Coherence, PopulationMinimaFillInUnderDecoherence)
{
    const auto p = ModelParams::reference();
    const auto env = cosine_taper(1500.0, 0.0, 0.1);
    const auto tr = integrate(p, env, 1500.0);
    const double period = kTwoPi / p.rabi_peak;
    const auto per = static_cast<std::size_t>(period / tr.dt);
    std::vector<double> minima;
    for (std::size_t start = 0; start + per < tr.size(); start += per) {
        double m = 1e300;
        for (std::size_t i = start; i < start + per; ++i) {
            const auto& s = tr.states[i];
            m = std::min(m, s.excited_population() - std::norm(s.sigma_minus()));
        }
        minima.push_back(m);
    }
    ASSERT_GT(minima.size(), 20u);
    for (std::size_t k = 1; k < minima.size(); ++k)
        EXPECT_GE(minima[k], minima[k - 1] - 1e-6) << k;
    EXPECT_GT(minima.back(), 10.0 * std::max(minima.front(), 1e-4));
}
