// polaron.hpp — Renormalized frame: shifted energies, dressed couplings, eigenbasis

#pragma once

#include <vector>

#include "pme/bath.hpp"
#include "pme/model.hpp"
#include "pme/types.hpp"

namespace pme {

struct PolaronFrame {
    RealVector epsilon_tilde;  // site energies shifted by the reorganization energy
    RealMatrix h0_tilde;       // site-basis renormalized Hamiltonian
    RealVector eigenvalues;    // descending order
    RealMatrix u;              // u(m, alpha) = <alpha|m>; columns diagonalize h0_tilde
    RealMatrix beta;           // renormalization factors, ones on the diagonal
    RealMatrix gamma;          // |V_mn| sqrt(1 - beta_mn^2), coupling fluctuation scales

    int n_sites() const { return static_cast<int>(epsilon_tilde.size()); }
    double eps_gap(int a, int b) const { return eigenvalues[a] - eigenvalues[b]; }
};

// Diagonalizes the renormalized Hamiltonian. Eigenvalues are sorted descending;
// each eigenvector's largest-magnitude component is made positive, and exactly
// degenerate blocks are re-fixed against site-index order for reproducibility.
PolaronFrame build_polaron_frame(const SiteNetwork& net, const BathSpec& bath,
                                 const KernelTables& kernels);

struct InitialState {
    ComplexMatrix rho_lab;          // site basis
    ComplexMatrix rho_polaron_site; // elementwise beta-scaled, site basis
    ComplexMatrix rho_eigen;        // rotated to the renormalized exciton basis
};

// Applies the elementwise beta scaling and rotates into the eigenbasis.
// Throws ConfigError if rho0 is not Hermitian, unit trace, and PSD.
InitialState transform_initial_state(const ComplexMatrix& rho0_lab, const PolaronFrame& frame);

struct PairValidity {
    int m{0}, n{0};
    double coupling_cm{0.0};
    double gamma_cm{0.0};
    double detuning_cm{0.0};
    bool coupling_below_detuning{false};
    bool gamma_below_characteristic{false};
};

struct ValidityReport {
    double characteristic_frequency_cm{0.0}; // location of the continuum maximum
    std::vector<PairValidity> pairs;
    bool all_ok() const;
};

ValidityReport validity_report(const PolaronFrame& frame, const SiteNetwork& net,
                               const SpectralDensity& sd);

} // namespace pme
