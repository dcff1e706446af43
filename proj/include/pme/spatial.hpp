// spatial.hpp — Spatial bath-correlation factors between site pairs

#pragma once

#include <cmath>

#include "pme/model.hpp"
#include "pme/types.hpp"
#include "pme/units.hpp"

namespace pme {

// Overlap Delta_{m,p}(w) between the baths seen by sites m and p, and the
// derived pair factors entering every kernel integrand:
//   lambda_{mn,pq}  = D_mp - D_mq - D_np + D_nq
//   lambda'_{ij,mn} = D_im - D_in + D_jm - D_jn
// Independent and fully correlated baths give frequency-independent factors;
// propagating modes give sinc(kappa w d / v_ph) inside the quadrature.
class SpatialCorrelation {
public:
    SpatialCorrelation(CorrelationKind kind, const SiteNetwork& net, double v_ph_nm_fs)
        : kind_(kind), v_ph_(v_ph_nm_fs) {
        if (kind_ == CorrelationKind::PropagatingModes) distances_ = *net.distances_nm;
    }

    CorrelationKind kind() const { return kind_; }
    bool omega_dependent() const { return kind_ == CorrelationKind::PropagatingModes; }

    double delta(int m, int p, double omega_cm) const {
        switch (kind_) {
        case CorrelationKind::Independent:
            return m == p ? 1.0 : 0.0;
        case CorrelationKind::FullyCorrelated:
            return 1.0;
        case CorrelationKind::PropagatingModes: {
            if (m == p) return 1.0;
            const double x = units::kappa * omega_cm * distances_(m, p) / v_ph_;
            return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
        }
        }
        return 0.0;
    }

    double lambda(int m, int n, int p, int q, double omega_cm) const {
        return delta(m, p, omega_cm) - delta(m, q, omega_cm) - delta(n, p, omega_cm) +
               delta(n, q, omega_cm);
    }

    double lambda_prime(int i, int j, int m, int n, double omega_cm) const {
        return delta(i, m, omega_cm) - delta(i, n, omega_cm) + delta(j, m, omega_cm) -
               delta(j, n, omega_cm);
    }

private:
    CorrelationKind kind_;
    double v_ph_{0.0};
    RealMatrix distances_;
};

} // namespace pme
