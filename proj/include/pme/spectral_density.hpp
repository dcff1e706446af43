// spectral_density.hpp — Super-Ohmic continuum plus Lorentzian localized mode

#pragma once

#include <optional>
#include <vector>

#include "pme/quadrature.hpp"
#include "pme/types.hpp"

namespace pme {

struct ContinuumTerm {
    double weight{1.0};    // dimensionless
    double cutoff_cm{1.0}; // 1/cm, must be positive
};

struct LocalizedMode {
    double weight{0.22};    // dimensionless
    double omega_cm{180.0}; // mode frequency, 1/cm
    double width_cm{50.0};  // Lorentzian broadening, 1/cm
};

// J(w) = s0 * J0(w) + sH * JH(w). J0 is a weight-normalized sum of terms
// w^5 / (7! 2 w_i^4) exp(-sqrt(w/w_i)), each carrying unit Huang-Rhys factor,
// so s0 (and sH for the mode) set the integrated coupling strengths directly.
struct SpectralDensity {
    double scale_continuum{0.0};
    std::vector<ContinuumTerm> continuum;
    std::optional<LocalizedMode> mode;

    double continuum_value(double omega_cm) const; // includes scale_continuum
    double mode_value(double omega_cm) const;      // includes mode weight
    double operator()(double omega_cm) const;      // total; omega_cm < 0 is a domain error
};

// lambda = integral of J(w)/w dw, by the shared quadrature contract.
double reorganization_energy(const SpectralDensity& sd, const quad::Settings& settings = {});

// Location of the maximum of the (unscaled) continuum J0; 0 if no continuum.
double continuum_peak_frequency(const SpectralDensity& sd);

// Panel boundaries covering all features of J (continuum scales, mode window,
// thermal scale) with widths able to resolve oscillations up to t_ref_fs.
std::vector<double> bath_panel_plan(const SpectralDensity& sd, double kT_cm,
                                    const quad::Settings& settings);

// The assembled Gauss-Legendre nodes on that plan.
quad::NodeSet bath_nodes(const SpectralDensity& sd, double kT_cm, const quad::Settings& settings);

// coth(w / 2kT) with a small-argument series below w < 1e-3 kT.
double coth_thermal(double omega_cm, double kT_cm);

} // namespace pme
