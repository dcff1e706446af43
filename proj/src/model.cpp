#include "pme/model.hpp"

#include <cmath>
#include <sstream>

#include "pme/errors.hpp"
#include "pme/units.hpp"

namespace pme {

std::vector<SitePair> SiteNetwork::coupled_pairs() const {
    std::vector<SitePair> pairs;
    const int n = n_sites();
    for (int m = 0; m < n; ++m)
        for (int k = m + 1; k < n; ++k)
            if (coupling_cm(m, k) != 0.0) pairs.push_back({m, k});
    return pairs;
}

void SiteNetwork::validate() const {
    const int n = n_sites();
    if (n < 2) throw ConfigError("site network needs at least 2 sites");
    if (coupling_cm.rows() != n || coupling_cm.cols() != n)
        throw ConfigError("coupling matrix dimension does not match site count");
    for (int m = 0; m < n; ++m) {
        if (coupling_cm(m, m) != 0.0)
            throw ConfigError("coupling matrix must have zero diagonal");
        for (int k = 0; k < n; ++k)
            if (std::abs(coupling_cm(m, k) - coupling_cm(k, m)) > 1e-12)
                throw ConfigError("coupling matrix must be symmetric");
    }
    if (distances_nm) {
        const auto& d = *distances_nm;
        if (d.rows() != n || d.cols() != n)
            throw ConfigError("distance matrix dimension does not match site count");
        for (int m = 0; m < n; ++m) {
            if (d(m, m) != 0.0) throw ConfigError("distance matrix must have zero diagonal");
            for (int k = 0; k < n; ++k) {
                if (d(m, k) < 0.0) throw ConfigError("distances must be non-negative");
                if (std::abs(d(m, k) - d(k, m)) > 1e-12)
                    throw ConfigError("distance matrix must be symmetric");
            }
        }
    }
}

void BathSpec::validate(const SiteNetwork& net) const {
    if (kT_cm <= 0.0) throw ConfigError("thermal energy kT must be positive");
    if (correlation == CorrelationKind::PropagatingModes) {
        if (v_ph_nm_fs <= 0.0)
            throw ConfigError("propagating-modes correlation requires a positive phonon speed");
        if (!net.distances_nm)
            throw ConfigError("propagating-modes correlation requires site distances");
    }
    for (const auto& term : sd.continuum) {
        if (term.weight < 0.0) throw ConfigError("continuum weights must be non-negative");
        if (term.cutoff_cm <= 0.0) throw ConfigError("continuum cutoffs must be positive");
    }
    if (sd.mode) {
        if (sd.mode->weight < 0.0) throw ConfigError("mode weight must be non-negative");
        if (sd.mode->omega_cm <= 0.0 || sd.mode->width_cm <= 0.0)
            throw ConfigError("mode frequency and width must be positive");
    }
    if (sd.scale_continuum < 0.0) throw ConfigError("continuum scale must be non-negative");
}

std::pair<SiteNetwork, BathSpec> fmo4_preset() {
    SiteNetwork net;
    net.epsilon_cm = RealVector(4);
    net.epsilon_cm << 280.0, 420.0, 0.0, 175.0;
    net.coupling_cm = RealMatrix::Zero(4, 4);
    net.coupling_cm << 0.0, -106.0, 8.0, -5.0, //
        -106.0, 0.0, 28.0, 6.0,                //
        8.0, 28.0, 0.0, -62.0,                 //
        -5.0, 6.0, -62.0, 0.0;

    BathSpec bath;
    bath.kT_cm = 200.0;
    bath.correlation = CorrelationKind::Independent;
    bath.sd.scale_continuum = 0.5;
    bath.sd.continuum = {{0.8, units::mev_to_cm(0.069)}, {0.5, units::mev_to_cm(0.24)}};
    bath.sd.mode = LocalizedMode{0.22, 180.0, 50.0};
    return {net, bath};
}

std::pair<SiteNetwork, BathSpec> fmo4_fast_bath_preset() {
    auto [net, bath] = fmo4_preset();
    bath.sd.mode.reset();
    bath.sd.scale_continuum /= 10.0;
    for (auto& term : bath.sd.continuum) term.cutoff_cm *= 10.0;
    return {net, bath};
}

} // namespace pme
