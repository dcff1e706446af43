// observables.hpp — Lab-frame readout, non-Markovianity measures, spectra

#pragma once

#include <vector>

#include "pme/dynamics.hpp"
#include "pme/types.hpp"

namespace pme {

enum class FrameTag { Polaron, Lab };

// Exact lab-frame site populations: diagonal of the site-basis polaron state.
RealMatrix site_populations(const Trajectory& traj); // (time x site)

// Zeroth-order lab coherence <sigma_m^+ sigma_n^-> =
//   beta_mn rho~_nm(t) + rho_nm(0) - beta_mn rho~_nm(0).
ComplexVector lab_coherence(const Trajectory& traj, int m, int n);

// Lab-frame density matrix at step k: exact diagonals plus zeroth-order coherences.
ComplexMatrix lab_density(const Trajectory& traj, Index k);

// Populations of the renormalized excitonic states in either frame.
RealMatrix eigen_populations(const Trajectory& traj, FrameTag frame_tag); // (time x state)

struct NonMarkovReport {
    RealVector times;
    RealVector distance;        // D(t)
    RealVector derivative;      // central differences, 1/fs
    std::vector<std::pair<double, double>> positive_intervals;
    double threshold{1e-6};
};

// Trace distance between two trajectories on a shared grid, with the intervals
// where it grows faster than the noise threshold.
NonMarkovReport trace_distance_analysis(const Trajectory& a, const Trajectory& b,
                                        FrameTag frame_tag, double threshold = 1e-6);

struct SpectrumPeak {
    double nu_cm{0.0};
    double height{0.0};
    double fwhm_cm{0.0};
};

struct Spectrum {
    RealVector nu_cm;     // wavenumber axis
    RealVector magnitude; // detrended, windowed transform magnitude
    std::vector<SpectrumPeak> peaks;
    double detrend_amplitude{0.0};
    double detrend_tau_fs{0.0};
};

struct SpectrumConfig {
    int pad_factor{4};
    double min_peak_fraction{0.1}; // of the global maximum
    double min_nu_cm{40.0};        // reject the detrend residual near zero
};

// Transform of a population series: removes a fitted constant-plus-exponential
// baseline, applies a Hann window, zero-pads, and reports peaks.
Spectrum population_spectrum(const RealVector& series, double dt_fs,
                             const SpectrumConfig& config = {});

// Extrema of a series with a magnitude filter; used by oscillation checks.
std::vector<Index> series_extrema(const RealVector& series, double min_prominence);

} // namespace pme
