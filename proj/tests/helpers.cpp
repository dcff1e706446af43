#include "helpers.hpp"

#include "pme/units.hpp"

namespace pme::testing {

ComplexMatrix unitary_evolution(const RealMatrix& h_cm, const ComplexMatrix& rho0, double t_fs) {
    Eigen::SelfAdjointEigenSolver<RealMatrix> es(h_cm);
    const ComplexMatrix v = es.eigenvectors().cast<Complex>();
    ComplexVector phases(h_cm.rows());
    for (Index k = 0; k < h_cm.rows(); ++k)
        phases[k] = std::exp(Complex(0.0, -units::kappa * es.eigenvalues()[k] * t_fs));
    const ComplexMatrix u = v * phases.asDiagonal() * v.adjoint();
    return u * rho0 * u.adjoint();
}

ComplexMatrix random_hermitian(int n, Lcg& rng) {
    ComplexMatrix m(n, n);
    for (int r = 0; r < n; ++r) {
        m(r, r) = 2.0 * rng.next() - 1.0;
        for (int c = r + 1; c < n; ++c) {
            m(r, c) = Complex(2.0 * rng.next() - 1.0, 2.0 * rng.next() - 1.0);
            m(c, r) = std::conj(m(r, c));
        }
    }
    return m;
}

ComplexMatrix random_density(int n, Lcg& rng) {
    ComplexMatrix a(n, n);
    for (int r = 0; r < n; ++r)
        for (int c = 0; c < n; ++c)
            a(r, c) = Complex(2.0 * rng.next() - 1.0, 2.0 * rng.next() - 1.0);
    ComplexMatrix rho = a * a.adjoint();
    rho /= rho.trace();
    return rho;
}

RealVector pauli_rk4(const RealMatrix& w, RealVector p, double dt, double t_max) {
    const auto steps = static_cast<long>(std::llround(t_max / dt));
    for (long s = 0; s < steps; ++s) {
        const RealVector k1 = w * p;
        const RealVector k2 = w * (p + 0.5 * dt * k1);
        const RealVector k3 = w * (p + 0.5 * dt * k2);
        const RealVector k4 = w * (p + dt * k3);
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return p;
}

} // namespace pme::testing
