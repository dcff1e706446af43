#include "pme/polaron.hpp"

#include <cmath>

#include "pme/errors.hpp"

namespace pme {

namespace {

void fix_eigenvector_signs(RealMatrix& u) {
    for (Index c = 0; c < u.cols(); ++c) {
        Index imax = 0;
        u.col(c).cwiseAbs().maxCoeff(&imax);
        if (u(imax, c) < 0.0) u.col(c) = -u.col(c);
    }
}

// Re-fix degenerate blocks by Gram-Schmidt against site-index order so the
// basis inside a block does not depend on solver internals.
void fix_degenerate_blocks(const RealVector& eps, RealMatrix& u, double tol) {
    const Index n = eps.size();
    Index b0 = 0;
    while (b0 < n) {
        Index b1 = b0;
        while (b1 + 1 < n && std::abs(eps[b1 + 1] - eps[b0]) < tol) ++b1;
        const Index width = b1 - b0 + 1;
        if (width > 1) {
            const RealMatrix block = u.middleCols(b0, width);
            const RealMatrix proj = block * block.transpose();
            RealMatrix fresh(u.rows(), width);
            Index got = 0;
            for (Index site = 0; site < u.rows() && got < width; ++site) {
                RealVector v = proj.col(site);
                for (Index k = 0; k < got; ++k) v -= fresh.col(k).dot(v) * fresh.col(k);
                const double norm = v.norm();
                if (norm > 1e-8) fresh.col(got++) = v / norm;
            }
            if (got == width) u.middleCols(b0, width) = fresh;
        }
        b0 = b1 + 1;
    }
}

} // namespace

PolaronFrame build_polaron_frame(const SiteNetwork& net, const BathSpec& bath,
                                 const KernelTables& kernels) {
    const int n = net.n_sites();
    PolaronFrame frame;
    frame.beta = kernels.beta_matrix();

    const double lambda_reorg = reorganization_energy(bath.sd);
    frame.epsilon_tilde = net.epsilon_cm.array() - lambda_reorg;

    frame.h0_tilde = net.coupling_cm.cwiseProduct(frame.beta);
    frame.h0_tilde.diagonal() = frame.epsilon_tilde;

    Eigen::SelfAdjointEigenSolver<RealMatrix> solver(frame.h0_tilde);
    frame.eigenvalues = solver.eigenvalues().reverse();
    frame.u = solver.eigenvectors().rowwise().reverse();
    fix_degenerate_blocks(frame.eigenvalues, frame.u, 1e-8);
    fix_eigenvector_signs(frame.u);

    frame.gamma = RealMatrix::Zero(n, n);
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) {
            if (m == k) continue;
            const double b = frame.beta(m, k);
            frame.gamma(m, k) =
                std::abs(net.coupling_cm(m, k)) * std::sqrt(std::max(0.0, 1.0 - b * b));
        }
    return frame;
}

InitialState transform_initial_state(const ComplexMatrix& rho0_lab, const PolaronFrame& frame) {
    const int n = frame.n_sites();
    if (rho0_lab.rows() != n || rho0_lab.cols() != n)
        throw ConfigError("initial state dimension does not match the network");
    if ((rho0_lab - rho0_lab.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
        throw ConfigError("initial state must be Hermitian");
    if (std::abs(rho0_lab.trace() - Complex(1.0, 0.0)) > 1e-10)
        throw ConfigError("initial state must have unit trace");
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(rho0_lab);
    if (solver.eigenvalues().minCoeff() < -1e-10)
        throw ConfigError("initial state must be positive semidefinite");

    InitialState state;
    state.rho_lab = rho0_lab;
    state.rho_polaron_site = rho0_lab.cwiseProduct(frame.beta.cast<Complex>());
    state.rho_eigen =
        frame.u.transpose().cast<Complex>() * state.rho_polaron_site * frame.u.cast<Complex>();
    return state;
}

bool ValidityReport::all_ok() const {
    for (const auto& p : pairs)
        if (!p.coupling_below_detuning || !p.gamma_below_characteristic) return false;
    return true;
}

ValidityReport validity_report(const PolaronFrame& frame, const SiteNetwork& net,
                               const SpectralDensity& sd) {
    ValidityReport report;
    report.characteristic_frequency_cm = continuum_peak_frequency(sd);
    for (const auto& pair : net.coupled_pairs()) {
        PairValidity row;
        row.m = pair.m;
        row.n = pair.n;
        row.coupling_cm = net.coupling_cm(pair.m, pair.n);
        row.gamma_cm = frame.gamma(pair.m, pair.n);
        row.detuning_cm = std::abs(net.epsilon_cm[pair.m] - net.epsilon_cm[pair.n]);
        row.coupling_below_detuning = std::abs(row.coupling_cm) < row.detuning_cm;
        row.gamma_below_characteristic = row.gamma_cm < report.characteristic_frequency_cm;
        report.pairs.push_back(row);
    }
    return report;
}

} // namespace pme
