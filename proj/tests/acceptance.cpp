// acceptance.cpp — End-to-end acceptance suite; prints one line per criterion.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "helpers.hpp"
#include "pme/dynamics.hpp"
#include "pme/observables.hpp"
#include "pme/superop.hpp"
#include "pme/units.hpp"

using namespace pme;

namespace {

struct Gate {
    int failures{0};

    void line(const std::string& name, bool ok, const std::string& detail) {
        std::printf("%s  %-14s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
        std::fflush(stdout);
        if (!ok) ++failures;
    }
};

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

ComplexMatrix localized(int n, int site) {
    ComplexMatrix rho = ComplexMatrix::Zero(n, n);
    rho(site, site) = 1.0;
    return rho;
}

// extrema after t_min with alternating-prominence filtering
int extrema_after(const Trajectory& traj, const RealVector& series, double t_min, double t_max,
                  double prominence) {
    int count = 0;
    for (const Index k : series_extrema(series, prominence))
        if (traj.times[k] > t_min && traj.times[k] < t_max) ++count;
    return count;
}

void invariant_worst(const Trajectory& traj, double& trace_drift, double& herm_defect) {
    for (Index k = 0; k < traj.n_steps(); ++k) {
        trace_drift = std::max(trace_drift,
                               std::abs(traj.rho_eigen(k).trace() - Complex(1.0, 0.0)));
        herm_defect =
            std::max(herm_defect, (traj.rho_eigen(k) - traj.rho_eigen(k).adjoint())
                                      .cwiseAbs()
                                      .maxCoeff());
    }
}

} // namespace

int main() {
    Gate gate;
    char buf[512];

    // ---------------------------------------------------------------- 1
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto [net, bath] = fmo4_preset();
        double beta[6];
        int idx = 0;
        for (int m = 0; m < 4; ++m)
            for (int n = m + 1; n < 4; ++n) beta[idx++] = renormalization_factor(net, bath, m, n);
        const double elapsed = seconds_since(t0);
        const double v12 = 106.0 * beta[0];
        double spread = 0.0;
        for (int i = 1; i < 6; ++i)
            spread = std::max(spread, std::abs(beta[i] - beta[0]) / beta[0]);
        const bool ok = std::abs(v12 - 0.107) / 0.107 <= 0.15 && spread < 1e-6 && elapsed < 1.0;
        std::snprintf(buf, sizeof(buf),
                      "|V~12| = %.4f 1/cm (target 0.107 +-15%%), pair spread %.1e, %.2f s",
                      v12, spread, elapsed);
        gate.line("criterion 1", ok, buf);
    }

    // ---------------------------------------------------------------- 2 (+ reuse for 3 and 7)
    Trajectory fmo_full, fmo_hom;
    {
        const auto t0 = std::chrono::steady_clock::now();
        auto [net, bath] = fmo4_preset();
        const KernelTables kernels = build_kernel_tables(net, bath, 0.125, 1000.0);
        PropagatorConfig cfg;
        cfg.dt_fs = 0.5;
        cfg.t_max_fs = 1000.0;
        cfg.tag = Propagator::Full;
        fmo_full = propagate(net, bath, kernels, localized(4, 0), cfg);
        cfg.tag = Propagator::HomOnly;
        fmo_hom = propagate(net, bath, kernels, localized(4, 0), cfg);
        const double elapsed = seconds_since(t0);

        const RealMatrix pf = site_populations(fmo_full);
        const RealMatrix ph = site_populations(fmo_hom);
        const int full_p1 = extrema_after(fmo_full, pf.col(0), 5.0, 700.0, 1e-3);
        const int full_p2 = extrema_after(fmo_full, pf.col(1), 5.0, 700.0, 1e-3);
        const int full_p1_late = extrema_after(fmo_full, pf.col(0), 700.0, 1000.0, 1e-3);
        const int hom_p1 = extrema_after(fmo_hom, ph.col(0), 0.0, 600.0, 1e-6);
        double dev_late = 0.0;
        for (Index k = 0; k < pf.rows(); ++k)
            if (fmo_full.times[k] > 700.0)
                dev_late = std::max(dev_late, (pf.row(k) - ph.row(k)).cwiseAbs().maxCoeff());

        const bool ok = full_p1 >= 3 && full_p2 >= 3 && full_p1_late == 0 && hom_p1 == 0 &&
                        dev_late < 0.02 && elapsed < 120.0;
        std::snprintf(buf, sizeof(buf),
                      "full p1/p2 extrema %d/%d (<700 fs), none beyond; hom extrema %d; "
                      "late dev %.4f; %.0f s",
                      full_p1, full_p2, hom_p1, dev_late, elapsed);
        gate.line("criterion 2", ok, buf);
    }

    // ---------------------------------------------------------------- 3
    Trajectory nomode_full;
    {
        const Spectrum with_mode =
            population_spectrum(site_populations(fmo_full).col(0), 0.5);
        auto [net, bath] = fmo4_preset();
        bath.sd.mode.reset();
        PropagatorConfig cfg;
        cfg.dt_fs = 0.5;
        cfg.t_max_fs = 1000.0;
        cfg.tag = Propagator::Full;
        nomode_full = propagate(net, bath, localized(4, 0), cfg);
        const Spectrum no_mode = population_spectrum(site_populations(nomode_full).col(0), 0.5);

        const bool have_peaks = !with_mode.peaks.empty() && !no_mode.peaks.empty();
        const double nu_mode = have_peaks ? with_mode.peaks.front().nu_cm : 0.0;
        const double nu_bare = have_peaks ? no_mode.peaks.front().nu_cm : 0.0;
        const double w_mode = have_peaks ? with_mode.peaks.front().fwhm_cm : 0.0;
        const double w_bare = have_peaks ? no_mode.peaks.front().fwhm_cm : 0.0;
        const bool ok = have_peaks && std::abs(nu_mode - 180.0) <= 15.0 && nu_bare >= 130.0 &&
                        nu_bare <= 160.0 && w_bare >= 2.0 * w_mode;
        std::snprintf(buf, sizeof(buf),
                      "mode peak %.1f 1/cm (fwhm %.1f); bare feature %.1f 1/cm (fwhm %.1f, "
                      "need 130-160 and 2x broader)",
                      nu_mode, w_mode, nu_bare, w_bare);
        gate.line("criterion 3", ok, buf);
    }

    // ---------------------------------------------------------------- 4 (+ tables reused by 5)
    Trajectory fast_markov_a, fast_markov_b, fast_secular;
    {
        auto [net, bath] = fmo4_fast_bath_preset();

        // reorganization energy preserved against the original continuum
        auto [net0, bath0] = fmo4_preset();
        SpectralDensity cont = bath0.sd;
        cont.mode.reset();
        const double rel_lambda =
            std::abs(reorganization_energy(bath.sd) - reorganization_energy(cont)) /
            reorganization_energy(cont);

        const KernelTables kernels = build_kernel_tables(net, bath, 1.0, 13000.0);
        PropagatorConfig cfg;
        cfg.dt_fs = 0.5;
        cfg.t_max_fs = 1000.0;
        cfg.tag = Propagator::Markov;
        fast_markov_a = propagate(net, bath, kernels, localized(4, 0), cfg);
        fast_markov_b = propagate(net, bath, kernels, localized(4, 1), cfg);
        const auto polaron =
            trace_distance_analysis(fast_markov_a, fast_markov_b, FrameTag::Polaron);
        const auto lab = trace_distance_analysis(fast_markov_a, fast_markov_b, FrameTag::Lab);

        cfg.tag = Propagator::Secular;
        fast_secular = propagate(net, bath, kernels, localized(4, 0), cfg);

        const double max_deriv = polaron.derivative.maxCoeff();
        const bool ok = rel_lambda < 1e-6 && max_deriv <= 1e-6 &&
                        polaron.positive_intervals.empty() && !lab.positive_intervals.empty();
        std::snprintf(buf, sizeof(buf),
                      "lambda preserved to %.1e; polaron max dD/dt %.1e 1/fs (0 intervals); "
                      "lab intervals %zu",
                      rel_lambda, max_deriv, lab.positive_intervals.size());
        gate.line("criterion 4", ok, buf);

        // ------------------------------------------------------------ 5
        const RealMatrix pol = eigen_populations(fast_secular, FrameTag::Polaron);
        const RealMatrix labp = eigen_populations(fast_secular, FrameTag::Lab);
        int worst_pol = 0, best_lab = 0;
        for (int a = 0; a < 4; ++a) {
            worst_pol =
                std::max(worst_pol, extrema_after(fast_secular, pol.col(a), 10.0, 1e9, 1e-6));
            best_lab = std::max(best_lab, extrema_after(fast_secular, labp.col(a), 0.0, 1e9, 1e-4));
        }

        // independent scalar Pauli oracle on the masked rate combinations
        const PolaronFrame& frame = fast_secular.frame;
        auto gtilde = markov_rates(kernels, frame, net).gtilde;
        apply_secular_mask(gtilde, secular_mask(frame, cfg.secular_tol_cm));
        RealMatrix w = RealMatrix::Zero(4, 4);
        const double k2 = units::kappa * units::kappa;
        for (int mu = 0; mu < 4; ++mu)
            for (int al = 0; al < 4; ++al) {
                if (mu == al) continue;
                const Complex loss =
                    gtilde[0](flat_index(mu, al, 4), flat_index(al, mu, 4)) +
                    gtilde[1](flat_index(al, mu, 4), flat_index(al, mu, 4)) +
                    gtilde[2](flat_index(mu, al, 4), flat_index(mu, al, 4)) +
                    gtilde[3](flat_index(al, mu, 4), flat_index(mu, al, 4));
                const Complex gain =
                    gtilde[0](flat_index(al, mu, 4), flat_index(mu, al, 4)) +
                    gtilde[1](flat_index(mu, al, 4), flat_index(mu, al, 4)) +
                    gtilde[2](flat_index(al, mu, 4), flat_index(al, mu, 4)) +
                    gtilde[3](flat_index(mu, al, 4), flat_index(al, mu, 4));
                w(mu, mu) -= 2.0 * k2 * loss.real();
                w(mu, al) += 2.0 * k2 * gain.real();
            }
        const InitialState init = transform_initial_state(localized(4, 0), frame);
        const RealVector oracle =
            testing::pauli_rk4(w, init.rho_eigen.diagonal().real(), 0.5, 1000.0);
        const double pauli_dev =
            (oracle - fast_secular.rho_eigen(fast_secular.n_steps() - 1).diagonal().real())
                .cwiseAbs()
                .maxCoeff();

        // a single thermal rise-and-fall of one state is incoherent kinetics,
        // not an oscillation; two or more extrema of a state would be
        const bool ok5 = worst_pol <= 1 && best_lab >= 2 && pauli_dev < 1e-8;
        std::snprintf(buf, sizeof(buf),
                      "polaron max extrema/state %d (oscillation needs >= 2); lab max %d; "
                      "Pauli oracle dev %.1e",
                      worst_pol, best_lab, pauli_dev);
        gate.line("criterion 5", ok5, buf);
    }

    // ---------------------------------------------------------------- 6
    Trajectory foerster_traj, redfield_traj, weak_full;
    {
        // (a) dressed-away couplings against the hopping propagator
        auto [net, bath] = fmo4_preset();
        PropagatorConfig cfg;
        cfg.dt_fs = 0.5;
        cfg.t_max_fs = 1000.0;
        cfg.tag = Propagator::Full;
        cfg.force_beta_zero = true;
        const Trajectory forced = propagate(net, bath, localized(4, 0), cfg);
        PropagatorConfig cfg_f;
        cfg_f.dt_fs = 0.5;
        cfg_f.t_max_fs = 1000.0;
        cfg_f.tag = Propagator::Foerster;
        foerster_traj = propagate(net, bath, localized(4, 0), cfg_f);
        const RealMatrix pa = site_populations(forced);
        const RealMatrix pb = site_populations(foerster_traj);
        const double dev_a =
            (pa.row(pa.rows() - 1) - pb.row(pb.rows() - 1)).cwiseAbs().maxCoeff();

        // (b) weak coupling against the single-phonon propagator
        auto [netw, bathw] = fmo4_fast_bath_preset();
        bathw.sd.scale_continuum *= 1e-3;
        PropagatorConfig cfg_w;
        cfg_w.dt_fs = 0.5;
        cfg_w.t_max_fs = 1000.0;
        cfg_w.tag = Propagator::Full;
        weak_full = propagate(netw, bathw, localized(4, 0), cfg_w);
        cfg_w.tag = Propagator::Redfield;
        redfield_traj = propagate(netw, bathw, localized(4, 0), cfg_w);
        const RealMatrix pw = site_populations(weak_full);
        const RealMatrix pr = site_populations(redfield_traj);
        const double dev_b =
            (pw.row(pw.rows() - 1) - pr.row(pr.rows() - 1)).cwiseAbs().maxCoeff();

        // (c) fully correlated baths against the matrix exponential
        auto [netc, bathc] = fmo4_preset();
        bathc.correlation = CorrelationKind::FullyCorrelated;
        PropagatorConfig cfg_c;
        cfg_c.dt_fs = 0.5;
        cfg_c.t_max_fs = 300.0;
        const Trajectory unitary = propagate(netc, bathc, localized(4, 0), cfg_c);
        double dev_c = 0.0;
        for (Index k = 0; k < unitary.n_steps(); k += 60) {
            const ComplexMatrix oracle = testing::unitary_evolution(
                unitary.frame.h0_tilde, localized(4, 0), unitary.times[k]);
            dev_c = std::max(dev_c, (unitary.rho_site(k) - oracle).cwiseAbs().maxCoeff());
        }

        const bool ok = dev_a < 0.01 && dev_b < 0.01 && dev_c < 1e-6;
        std::snprintf(buf, sizeof(buf),
                      "hopping limit dev %.2e (1 ps); weak-coupling dev %.2e; unitary dev %.1e",
                      dev_a, dev_b, dev_c);
        gate.line("criterion 6", ok, buf);
    }

    // ---------------------------------------------------------------- 7
    {
        double trace_drift = 0.0, herm_defect = 0.0;
        for (const Trajectory* traj : {&fmo_full, &fmo_hom, &fast_markov_a, &fast_secular,
                                       &redfield_traj, &foerster_traj})
            invariant_worst(*traj, trace_drift, herm_defect);

        // incremental rates against the direct quadrature oracle at t = 250 fs
        auto [net, bath] = fmo4_preset();
        const KernelTables kernels = build_kernel_tables(net, bath, 0.25, 260.0);
        const PolaronFrame frame = build_polaron_frame(net, bath, kernels);
        HomRateEngine engine(kernels, frame, net);
        while (engine.time() < 250.0 - 1e-9) engine.advance(0.5);
        const HomRates incremental = engine.materialize();
        double rate_dev = 0.0;
        {
            const double du = 0.05;
            const auto n_steps = static_cast<Index>(std::llround(250.0 / du));
            std::array<ComplexMatrix, 4> gt;
            for (auto& g : gt) g = ComplexMatrix::Zero(16, 16);
            for (Index k = 0; k <= n_steps; ++k) {
                const double u = du * static_cast<double>(k);
                double wq = (k == 0 || k == n_steps) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
                wq *= du / 3.0;
                for (int c = 0; c < 4; ++c) {
                    const ComplexMatrix corr = hom_correlator(kernels, frame, net, c, u);
                    const double sigma = channel_traits[c].phase_sign;
                    for (Index col = 0; col < 16; ++col) {
                        const double eps = frame.eps_gap(static_cast<int>(col) / 4,
                                                         static_cast<int>(col) % 4);
                        gt[c].col(col) += wq *
                                          std::exp(Complex(0.0,
                                                           -sigma * units::kappa * eps * u)) *
                                          corr.col(col);
                    }
                }
            }
            for (int c = 0; c < 4; ++c) {
                const double sigma = channel_traits[c].phase_sign;
                for (Index col = 0; col < 16; ++col) {
                    const double eps = frame.eps_gap(static_cast<int>(col) / 4,
                                                     static_cast<int>(col) % 4);
                    gt[c].col(col) *=
                        std::exp(Complex(0.0, sigma * units::kappa * eps * 250.0));
                }
                rate_dev = std::max(rate_dev,
                                    (incremental.gamma[c] - gt[c]).cwiseAbs().maxCoeff() /
                                        gt[c].cwiseAbs().maxCoeff());
            }
        }

        // node doubling
        quad::Settings doubled;
        doubled.nodes_per_panel = 32;
        const KernelTables k2t = build_kernel_tables(net, bath, 0.25, 260.0, doubled);
        const double beta_dev =
            std::abs(kernels.beta(0, 1) - k2t.beta(0, 1)) / k2t.beta(0, 1);
        const double k0_dev = std::abs(kernels.kernel_K(0, 0, 0.0) - k2t.kernel_K(0, 0, 0.0)) /
                              std::abs(k2t.kernel_K(0, 0, 0.0));

        // RK4 order on the homogeneous propagator
        const auto endpoint = [&](double dt) {
            PropagatorConfig cfg;
            cfg.tag = Propagator::HomOnly;
            cfg.dt_fs = dt;
            cfg.t_max_fs = 100.0;
            cfg.table_dt_fs = 0.125;
            const Trajectory traj = propagate(net, bath, localized(4, 0), cfg);
            return traj.rho_eigen(traj.n_steps() - 1);
        };
        const ComplexMatrix y2 = endpoint(2.0), y1 = endpoint(1.0), y05 = endpoint(0.5);
        const double order =
            std::log2((y2 - y1).cwiseAbs().maxCoeff() / (y1 - y05).cwiseAbs().maxCoeff());

        // beta identity
        const double beta_id = std::abs(kernels.kernel_K(0, 0, 0.0).real() +
                                        2.0 * std::log(kernels.beta(0, 1)));

        const bool ok = trace_drift < 1e-8 && herm_defect < 1e-8 && rate_dev < 1e-5 &&
                        beta_dev < 1e-6 && k0_dev < 1e-6 && std::abs(order - 4.0) <= 0.3 &&
                        beta_id < 1e-8;
        std::snprintf(buf, sizeof(buf),
                      "trace %.1e herm %.1e; rate oracle %.1e; node-doubling %.1e/%.1e; "
                      "rk4 order %.2f; K(0)+2lnb %.1e",
                      trace_drift, herm_defect, rate_dev, beta_dev, k0_dev, order, beta_id);
        gate.line("criterion 7", ok, buf);
    }

    std::printf("%s\n", gate.failures == 0 ? "acceptance: all criteria passed"
                                           : "acceptance: FAILURES present");
    return gate.failures == 0 ? 0 : 1;
}
