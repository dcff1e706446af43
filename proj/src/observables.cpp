#include "pme/observables.hpp"

#include <cmath>

#include <unsupported/Eigen/FFT>

#include "pme/errors.hpp"
#include "pme/units.hpp"

namespace pme {

RealMatrix site_populations(const Trajectory& traj) {
    const int n = traj.frame.n_sites();
    RealMatrix pops(traj.n_steps(), n);
    for (Index k = 0; k < traj.n_steps(); ++k)
        pops.row(k) = traj.rho_site(k).diagonal().real();
    return pops;
}

ComplexMatrix lab_density(const Trajectory& traj, Index k) {
    const int n = traj.frame.n_sites();
    const ComplexMatrix site = traj.rho_site(k);
    ComplexMatrix lab = site;
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c) {
            if (r == c) continue;
            const double b = traj.frame.beta(r, c);
            lab(r, c) = b * site(r, c) + (1.0 - b * b) * traj.initial.rho_lab(r, c);
        }
    return lab;
}

ComplexVector lab_coherence(const Trajectory& traj, int m, int n) {
    if (m == n) throw DomainError("lab coherence needs two distinct sites");
    ComplexVector out(traj.n_steps());
    for (Index k = 0; k < traj.n_steps(); ++k) out[k] = lab_density(traj, k)(n, m);
    return out;
}

RealMatrix eigen_populations(const Trajectory& traj, FrameTag frame_tag) {
    const int n = traj.frame.n_sites();
    RealMatrix pops(traj.n_steps(), n);
    const ComplexMatrix u = traj.frame.u.cast<Complex>();
    for (Index k = 0; k < traj.n_steps(); ++k) {
        if (frame_tag == FrameTag::Polaron) {
            pops.row(k) = traj.rho_eigen(k).diagonal().real();
        } else {
            const ComplexMatrix lab_eig = u.transpose() * lab_density(traj, k) * u;
            pops.row(k) = lab_eig.diagonal().real();
        }
    }
    return pops;
}

NonMarkovReport trace_distance_analysis(const Trajectory& a, const Trajectory& b,
                                        FrameTag frame_tag, double threshold) {
    if (a.n_steps() != b.n_steps() ||
        (a.times - b.times).cwiseAbs().maxCoeff() > 1e-9)
        throw DomainError("trace distance needs trajectories on a shared time grid");
    if (a.tag != b.tag)
        throw DomainError("trace distance needs trajectories from the same propagator");

    NonMarkovReport report;
    report.threshold = threshold;
    report.times = a.times;
    report.distance.resize(a.n_steps());
    for (Index k = 0; k < a.n_steps(); ++k) {
        const ComplexMatrix diff = frame_tag == FrameTag::Lab
                                       ? ComplexMatrix(lab_density(a, k) - lab_density(b, k))
                                       : ComplexMatrix(a.rho_eigen(k) - b.rho_eigen(k));
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(diff);
        report.distance[k] = 0.5 * es.eigenvalues().cwiseAbs().sum();
    }

    const Index npts = a.n_steps();
    report.derivative = RealVector::Zero(npts);
    for (Index k = 1; k + 1 < npts; ++k)
        report.derivative[k] =
            (report.distance[k + 1] - report.distance[k - 1]) / (a.times[k + 1] - a.times[k - 1]);
    if (npts >= 2) {
        report.derivative[0] = (report.distance[1] - report.distance[0]) /
                               (a.times[1] - a.times[0]);
        report.derivative[npts - 1] =
            (report.distance[npts - 1] - report.distance[npts - 2]) /
            (a.times[npts - 1] - a.times[npts - 2]);
    }

    bool open = false;
    double start = 0.0;
    for (Index k = 0; k < npts; ++k) {
        const bool positive = report.derivative[k] > threshold;
        if (positive && !open) {
            open = true;
            start = a.times[k];
        } else if (!positive && open) {
            open = false;
            report.positive_intervals.emplace_back(start, a.times[k]);
        }
    }
    if (open) report.positive_intervals.emplace_back(start, a.times[npts - 1]);
    return report;
}

namespace {

// Least-squares fit of p(t) ~ a + b exp(-t/tau) over a log grid of tau,
// weighted by the same Hann window the transform applies. This minimizes the
// baseline energy that actually reaches the transform, which keeps slow
// kinetics from leaking into the low-frequency bins.
void fit_exponential_baseline(const RealVector& series, double dt, double& a_out, double& b_out,
                              double& tau_out) {
    const Index n = series.size();
    const double t_end = dt * static_cast<double>(n - 1);
    RealVector w2(n);
    for (Index k = 0; k < n; ++k) {
        const double hann =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) / (n - 1)));
        w2[k] = hann * hann;
    }
    double best_res = -1.0;
    for (int it = 0; it < 240; ++it) {
        const double tau =
            2.0 * dt * std::pow(50.0 * t_end / (2.0 * dt), static_cast<double>(it) / 239.0);
        double s_ee = 0.0, s_e = 0.0, s_ye = 0.0, s_y = 0.0, s_1 = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double e = std::exp(-dt * static_cast<double>(k) / tau);
            s_ee += w2[k] * e * e;
            s_e += w2[k] * e;
            s_ye += w2[k] * series[k] * e;
            s_y += w2[k] * series[k];
            s_1 += w2[k];
        }
        const double det = s_1 * s_ee - s_e * s_e;
        if (std::abs(det) < 1e-30) continue;
        const double b = (s_1 * s_ye - s_e * s_y) / det;
        const double a = (s_y - b * s_e) / s_1;
        double res = 0.0;
        for (Index k = 0; k < n; ++k) {
            const double e = std::exp(-dt * static_cast<double>(k) / tau);
            const double d = series[k] - a - b * e;
            res += w2[k] * d * d;
        }
        if (best_res < 0.0 || res < best_res) {
            best_res = res;
            a_out = a;
            b_out = b;
            tau_out = tau;
        }
    }
}

} // namespace

Spectrum population_spectrum(const RealVector& series, double dt_fs,
                             const SpectrumConfig& config) {
    if (series.size() < 128)
        throw DomainError("population spectrum needs at least 128 samples");
    const Index n = series.size();

    double a = 0.0, b = 0.0, tau = 1.0;
    fit_exponential_baseline(series, dt_fs, a, b, tau);

    std::vector<Complex> padded(static_cast<std::size_t>(n) * config.pad_factor,
                                Complex(0.0, 0.0));
    for (Index k = 0; k < n; ++k) {
        const double hann =
            0.5 * (1.0 - std::cos(2.0 * M_PI * static_cast<double>(k) / (n - 1)));
        const double detrended =
            series[k] - a - b * std::exp(-dt_fs * static_cast<double>(k) / tau);
        padded[static_cast<std::size_t>(k)] = hann * detrended;
    }

    Eigen::FFT<double> fft;
    std::vector<Complex> freq(padded.size());
    fft.fwd(freq, padded);

    const Index m = static_cast<Index>(padded.size() / 2);
    Spectrum spec;
    spec.detrend_amplitude = b;
    spec.detrend_tau_fs = tau;
    spec.nu_cm.resize(m);
    spec.magnitude.resize(m);
    const double dnu =
        1.0 / (units::speed_of_light_cm_fs * dt_fs * static_cast<double>(padded.size()));
    for (Index k = 0; k < m; ++k) {
        spec.nu_cm[k] = dnu * static_cast<double>(k);
        spec.magnitude[k] = std::abs(freq[static_cast<std::size_t>(k)]);
    }

    const double peak_floor = config.min_peak_fraction * spec.magnitude.maxCoeff();
    for (Index k = 1; k + 1 < m; ++k) {
        if (spec.nu_cm[k] < config.min_nu_cm) continue;
        if (spec.magnitude[k] < peak_floor) continue;
        if (spec.magnitude[k] <= spec.magnitude[k - 1] ||
            spec.magnitude[k] <= spec.magnitude[k + 1])
            continue;
        SpectrumPeak peak;
        // parabolic refinement of the peak position
        const double y0 = spec.magnitude[k - 1], y1 = spec.magnitude[k],
                     y2 = spec.magnitude[k + 1];
        const double denom = y0 - 2.0 * y1 + y2;
        const double shift = std::abs(denom) > 1e-300 ? 0.5 * (y0 - y2) / denom : 0.0;
        peak.nu_cm = spec.nu_cm[k] + shift * dnu;
        peak.height = y1;
        // width at half height via linear interpolation
        const double half = 0.5 * y1;
        Index lo = k, hi = k;
        while (lo > 0 && spec.magnitude[lo] > half) --lo;
        while (hi + 1 < m && spec.magnitude[hi] > half) ++hi;
        auto cross = [&](Index i0, Index i1) {
            const double m0 = spec.magnitude[i0], m1 = spec.magnitude[i1];
            if (std::abs(m1 - m0) < 1e-300) return spec.nu_cm[i0];
            return spec.nu_cm[i0] + (half - m0) / (m1 - m0) * (spec.nu_cm[i1] - spec.nu_cm[i0]);
        };
        const double nu_lo = lo < k ? cross(lo, lo + 1) : spec.nu_cm[lo];
        const double nu_hi = hi > k ? cross(hi - 1, hi) : spec.nu_cm[hi];
        peak.fwhm_cm = nu_hi - nu_lo;
        spec.peaks.push_back(peak);
    }
    std::sort(spec.peaks.begin(), spec.peaks.end(),
              [](const SpectrumPeak& x, const SpectrumPeak& y) { return x.height > y.height; });
    return spec;
}

std::vector<Index> series_extrema(const RealVector& series, double min_prominence) {
    std::vector<Index> extrema;
    const Index n = series.size();
    Index last_ref = 0;
    for (Index k = 1; k + 1 < n; ++k) {
        const bool is_max = series[k] > series[k - 1] && series[k] >= series[k + 1];
        const bool is_min = series[k] < series[k - 1] && series[k] <= series[k + 1];
        if (!is_max && !is_min) continue;
        if (std::abs(series[k] - series[last_ref]) >= min_prominence) {
            extrema.push_back(k);
            last_ref = k;
        }
    }
    return extrema;
}

} // namespace pme
