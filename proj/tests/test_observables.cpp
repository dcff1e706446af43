#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "pme/errors.hpp"
#include "pme/observables.hpp"
#include "pme/units.hpp"

using namespace pme;

namespace {

ComplexMatrix localized(int n, int site) {
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    rho(site, site) = 1.0;
    return rho;
}

ComplexMatrix symmetric_superposition(int n, int a, int b) {
    ComplexVector psi = ComplexVector::Zero(n);
    psi[a] = psi[b] = 1.0 / std::sqrt(2.0);
    return psi * psi.adjoint();
}

Trajectory short_run(Propagator tag, const ComplexMatrix& rho0, double t_max = 120.0,
                     bool fully_correlated = false) {
    auto [net, bath] = fmo4_preset();
    if (fully_correlated) bath.correlation = CorrelationKind::FullyCorrelated;
    PropagatorConfig config;
    config.tag = tag;
    config.dt_fs = 0.5;
    config.t_max_fs = t_max;
    return propagate(net, bath, rho0, config);
}

} // namespace

TEST_CASE("site populations") {
    const Trajectory traj = short_run(Propagator::HomOnly, localized(4, 0));
    const RealMatrix pops = site_populations(traj);

    CHECK(pops(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    for (Index k = 0; k < traj.n_steps(); k += 40)
        CHECK(pops.row(k).sum() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("lab coherences") {
    SUBCASE("initial value reproduced exactly") {
        const Trajectory traj = short_run(Propagator::HomOnly, symmetric_superposition(4, 0, 1));
        const ComplexVector coh = lab_coherence(traj, 0, 1);
        CHECK(coh[0].real() == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(std::abs(coh[0].imag()) < 1e-14);
    }
    SUBCASE("localized states keep coherences at the dressing scale") {
        const Trajectory traj = short_run(Propagator::HomOnly, localized(4, 0));
        const double beta = traj.frame.beta(0, 1);
        const ComplexVector coh = lab_coherence(traj, 0, 1);
        for (Index k = 0; k < coh.size(); k += 40) CHECK(std::abs(coh[k]) <= beta + 1e-12);
    }
    SUBCASE("same-site request is rejected") {
        const Trajectory traj = short_run(Propagator::HomOnly, localized(4, 0), 20.0);
        CHECK_THROWS_AS(lab_coherence(traj, 1, 1), DomainError);
    }
}

TEST_CASE("eigenstate populations") {
    SUBCASE("stationary under decoupled dynamics for an eigenstate start") {
        auto [net, bath] = fmo4_preset();
        bath.correlation = CorrelationKind::FullyCorrelated;
        PropagatorConfig config;
        config.dt_fs = 0.5;
        config.t_max_fs = 150.0;
        const KernelTables kernels = build_kernel_tables(net, bath, 0.125, 150.0);
        const PolaronFrame frame = build_polaron_frame(net, bath, kernels);
        // prepare the highest renormalized excitonic state in the site basis
        const RealVector v = frame.u.col(0);
        const ComplexMatrix rho0 = (v * v.transpose()).cast<Complex>();
        const Trajectory traj = propagate(net, bath, kernels, rho0, config);
        const RealMatrix pops = eigen_populations(traj, FrameTag::Polaron);
        for (Index k = 0; k < traj.n_steps(); k += 50) {
            CHECK(pops(k, 0) == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
    SUBCASE("populations sum to one in both frames") {
        const Trajectory traj = short_run(Propagator::HomOnly, localized(4, 1));
        for (const auto tag : {FrameTag::Polaron, FrameTag::Lab}) {
            const RealMatrix pops = eigen_populations(traj, tag);
            for (Index k = 0; k < traj.n_steps(); k += 60)
                CHECK(pops.row(k).sum() == doctest::Approx(1.0).epsilon(1e-9));
        }
    }
}

TEST_CASE("trace distance analysis") {
    const Trajectory ta = short_run(Propagator::HomOnly, localized(4, 0));
    const Trajectory tb = short_run(Propagator::HomOnly, localized(4, 1));

    SUBCASE("identical trajectories give zero distance") {
        const auto report = trace_distance_analysis(ta, ta, FrameTag::Polaron);
        CHECK(report.distance.cwiseAbs().maxCoeff() < 1e-14);
        CHECK(report.positive_intervals.empty());
    }
    SUBCASE("orthogonal pure states start at distance one") {
        for (const auto tag : {FrameTag::Polaron, FrameTag::Lab}) {
            const auto report = trace_distance_analysis(ta, tb, tag);
            CHECK(report.distance[0] == doctest::Approx(1.0).epsilon(1e-10));
            for (Index k = 0; k < report.distance.size(); ++k) {
                CHECK(report.distance[k] >= -1e-12);
                CHECK(report.distance[k] <= 1.0 + 1e-12);
            }
        }
    }
    SUBCASE("mismatched grids are rejected") {
        const Trajectory tc = short_run(Propagator::HomOnly, localized(4, 1), 60.0);
        CHECK_THROWS_AS(trace_distance_analysis(ta, tc, FrameTag::Polaron), DomainError);
    }
}

TEST_CASE("population spectrum") {
    SUBCASE("pure cosine lands within one padded bin") {
        const double dt = 0.5;
        const Index n = 2001;
        RealVector series(n);
        for (Index k = 0; k < n; ++k)
            series[k] =
                0.5 + 0.2 * std::cos(units::kappa * 180.0 * dt * static_cast<double>(k));
        const Spectrum spec = population_spectrum(series, dt);
        REQUIRE_FALSE(spec.peaks.empty());
        const double bin =
            1.0 / (units::speed_of_light_cm_fs * dt * static_cast<double>(4 * n));
        CHECK(std::abs(spec.peaks.front().nu_cm - 180.0) < bin + 0.5);
    }
    SUBCASE("peak location invariant under the padding factor") {
        const double dt = 0.5;
        const Index n = 1024;
        RealVector series(n);
        for (Index k = 0; k < n; ++k) {
            const double t = dt * static_cast<double>(k);
            series[k] = 0.4 + 0.3 * std::exp(-t / 700.0) +
                        0.1 * std::exp(-t / 400.0) * std::cos(units::kappa * 150.0 * t);
        }
        SpectrumConfig c2, c4;
        c2.pad_factor = 2;
        c4.pad_factor = 4;
        const Spectrum s2 = population_spectrum(series, dt, c2);
        const Spectrum s4 = population_spectrum(series, dt, c4);
        REQUIRE_FALSE(s2.peaks.empty());
        REQUIRE_FALSE(s4.peaks.empty());
        const double prepad_bin =
            1.0 / (units::speed_of_light_cm_fs * dt * static_cast<double>(n));
        CHECK(std::abs(s2.peaks.front().nu_cm - s4.peaks.front().nu_cm) < prepad_bin);
    }
    SUBCASE("detrending removes the decaying baseline") {
        const double dt = 0.5;
        const Index n = 512;
        RealVector series(n);
        for (Index k = 0; k < n; ++k)
            series[k] = 0.3 + 0.6 * std::exp(-dt * static_cast<double>(k) / 300.0);
        const Spectrum spec = population_spectrum(series, dt);
        CHECK(spec.detrend_tau_fs == doctest::Approx(300.0).epsilon(0.02));
        CHECK(spec.detrend_amplitude == doctest::Approx(0.6).epsilon(0.02));
        // the residual carries a vanishing fraction of the series energy
        CHECK(spec.magnitude.maxCoeff() < 1e-4 * static_cast<double>(n));
    }
    SUBCASE("short series are rejected") {
        CHECK_THROWS_AS(population_spectrum(RealVector::Zero(100), 0.5), DomainError);
    }
}

TEST_CASE("site populations read out without any dressing factor") {
    // perturbing beta in the stored frame must not change the population map;
    // beta enters the dynamics and the coherence readout only
    Trajectory traj = short_run(Propagator::HomOnly, localized(4, 0), 60.0);
    const RealMatrix before = site_populations(traj);
    traj.frame.beta *= 1.1;
    const RealMatrix after = site_populations(traj);
    CHECK((before - after).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("series extrema counter") {
    RealVector series(200);
    for (Index k = 0; k < 200; ++k)
        series[k] = std::exp(-static_cast<double>(k) / 80.0) *
                    std::cos(2.0 * M_PI * static_cast<double>(k) / 40.0);
    const auto extrema = series_extrema(series, 0.05);
    CHECK(extrema.size() >= 4);
    // a monotone series has none
    RealVector mono(200);
    for (Index k = 0; k < 200; ++k) mono[k] = 1.0 / (1.0 + static_cast<double>(k));
    CHECK(series_extrema(mono, 1e-6).empty());
}
