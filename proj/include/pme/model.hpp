// model.hpp — Excitation network, bath specification, and presets

#pragma once

#include <optional>
#include <vector>

#include "pme/spectral_density.hpp"
#include "pme/types.hpp"

namespace pme {

// Site energies and electronic couplings of the single-excitation network.
struct SiteNetwork {
    RealVector epsilon_cm;                 // site energies, 1/cm
    RealMatrix coupling_cm;                // symmetric, zero diagonal, 1/cm
    std::optional<RealMatrix> distances_nm; // symmetric pairwise distances

    int n_sites() const { return static_cast<int>(epsilon_cm.size()); }
    std::vector<SitePair> coupled_pairs() const; // pairs (m < n) with nonzero coupling
    void validate() const;                       // throws ConfigError on violation
};

enum class CorrelationKind { Independent, FullyCorrelated, PropagatingModes };

struct BathSpec {
    double kT_cm{200.0};
    CorrelationKind correlation{CorrelationKind::Independent};
    double v_ph_nm_fs{0.0}; // phonon speed for PropagatingModes
    SpectralDensity sd;     // single spectral density shared by all sites

    void validate(const SiteNetwork& net) const;
};

// Four-site light-harvesting subsystem used throughout the tests.
std::pair<SiteNetwork, BathSpec> fmo4_preset();

// Same network with a continuum-only bath whose cutoffs are scaled up tenfold
// and overall continuum weight down tenfold; the reorganization energy is
// unchanged and the bath correlations decay fast enough for a Markov treatment.
std::pair<SiteNetwork, BathSpec> fmo4_fast_bath_preset();

} // namespace pme
