// helpers.hpp — Shared oracles for the test suites

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "pme/polaron.hpp"
#include "pme/types.hpp"

namespace pme::testing {

// Deterministic 64-bit LCG in [0, 1).
struct Lcg {
    std::uint64_t state{0x9e3779b97f4a7c15ULL};
    double next() {
        state = state * 6364136223846793005ULL + 1442695040888963407ULL;
        return static_cast<double>(state >> 11) / 9007199254740992.0;
    }
};

// Brute-force trapezoid integral of f over [0, hi] on `points` samples.
inline double trapezoid(const std::function<double(double)>& f, double hi, long points) {
    double acc = 0.0;
    const double h = hi / static_cast<double>(points - 1);
    for (long k = 0; k < points; ++k) {
        const double w = (k == 0 || k == points - 1) ? 0.5 : 1.0;
        acc += w * f(h * static_cast<double>(k));
    }
    return acc * h;
}

// Unitary evolution exp(-i kappa H t) rho exp(+i kappa H t) for real symmetric H.
ComplexMatrix unitary_evolution(const RealMatrix& h_cm, const ComplexMatrix& rho0, double t_fs);

// Random Hermitian matrix with entries in [-1, 1].
ComplexMatrix random_hermitian(int n, Lcg& rng);

// Random density matrix (positive, unit trace).
ComplexMatrix random_density(int n, Lcg& rng);

// Scalar RK4 integration of dp/dt = W p on [0, t_max].
RealVector pauli_rk4(const RealMatrix& w, RealVector p, double dt, double t_max);

} // namespace pme::testing
