#include "pme/dynamics.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>

#include "pme/errors.hpp"
#include "pme/superop.hpp"
#include "pme/units.hpp"

namespace pme {

std::string propagator_name(Propagator tag) {
    switch (tag) {
    case Propagator::Full: return "full";
    case Propagator::HomOnly: return "hom-only";
    case Propagator::Markov: return "markov";
    case Propagator::Secular: return "secular";
    case Propagator::Redfield: return "redfield";
    case Propagator::Foerster: return "foerster";
    }
    return "?";
}

Propagator propagator_from_name(const std::string& name) {
    if (name == "full") return Propagator::Full;
    if (name == "hom-only" || name == "hom_only") return Propagator::HomOnly;
    if (name == "markov") return Propagator::Markov;
    if (name == "secular") return Propagator::Secular;
    if (name == "redfield") return Propagator::Redfield;
    if (name == "foerster") return Propagator::Foerster;
    throw ConfigError("unknown propagator '" + name + "'");
}

ComplexMatrix Trajectory::rho_site(Index k) const {
    const ComplexMatrix u = frame.u.cast<Complex>();
    return u * rho[static_cast<std::size_t>(k)] * u.transpose();
}

ComplexMatrix assemble_generator(const std::array<ComplexMatrix, 4>& gamma,
                                 const PolaronFrame& frame, double t_fs) {
    const int n = frame.n_sites();
    const Index n2 = static_cast<Index>(n) * n;
    ComplexMatrix m = ComplexMatrix::Zero(n2, n2);
    for (int c = 0; c < 4; ++c) {
        const auto& traits = channel_traits[c];
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const Index row = flat_index(a, b, n);
                const double eps_ab =
                    traits.first_dagger ? frame.eps_gap(b, a) : frame.eps_gap(a, b);
                const Complex phase =
                    std::exp(Complex(0.0, units::kappa * eps_ab * t_fs));
                const int a1 = traits.first_dagger ? b : a;
                const int a2 = traits.first_dagger ? a : b;
                for (int mu = 0; mu < n; ++mu)
                    for (int nu = 0; nu < n; ++nu) {
                        const Complex coeff = gamma[c](row, flat_index(mu, nu, n)) * phase;
                        if (coeff == Complex(0.0, 0.0)) continue;
                        const int b1 = traits.second_dagger ? nu : mu;
                        const int b2 = traits.second_dagger ? mu : nu;
                        add_elementary_commutator(m, coeff, a1, a2, b1, b2, n);
                    }
            }
    }
    return -units::kappa * units::kappa * hermitian_closure(m, n);
}

ComplexVector assemble_source(InhomEngine& engine, Index stage) {
    engine.advance_to(stage);
    return flatten(engine.source_matrix(stage));
}

std::pair<double, double> kernel_grid_for(const PropagatorConfig& config) {
    // The TCL propagators sample kernels at quarter steps. The Markov-limit
    // family integrates kernels to their decay horizon instead, which reaches
    // picoseconds for the power-law correlator tails, so those tables are
    // longer and coarser.
    double table_dt = config.table_dt_fs;
    double table_t_max = config.table_t_max_fs;
    switch (config.tag) {
    case Propagator::Full:
    case Propagator::HomOnly:
        if (table_dt <= 0.0) table_dt = config.dt_fs / 4.0;
        if (table_t_max <= 0.0) table_t_max = config.t_max_fs;
        break;
    case Propagator::Markov:
    case Propagator::Secular:
        if (table_dt <= 0.0) table_dt = std::max(config.dt_fs, 1.0);
        if (table_t_max <= 0.0) table_t_max = std::max(config.t_max_fs, 13000.0);
        break;
    case Propagator::Redfield:
        if (table_dt <= 0.0) table_dt = std::max(config.dt_fs, 1.0);
        if (table_t_max <= 0.0) table_t_max = config.t_max_fs;
        break;
    case Propagator::Foerster:
        if (table_dt <= 0.0) table_dt = std::min(config.dt_fs, 0.5);
        if (table_t_max <= 0.0) table_t_max = std::max(config.t_max_fs, 6000.0);
        break;
    }
    return {table_dt, table_t_max};
}

namespace {

class InvariantMonitor {
public:
    InvariantMonitor(const PropagatorConfig& config) : config_(config) {}

    void check(const ComplexVector& y, int n, double t_fs, long step) const {
        const ComplexMatrix rho = unflatten(y, n);
        const double trace_drift = std::abs(rho.trace() - Complex(1.0, 0.0));
        const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
        if (trace_drift > config_.trace_abort_tol || herm > 1e-4) {
            std::ostringstream os;
            os << "propagation invariant violated at step " << step << " (t = " << t_fs
               << " fs): trace drift " << trace_drift << ", hermiticity defect " << herm;
            throw NumericalError(os.str());
        }
        Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(0.5 * (rho + rho.adjoint()));
        const double min_eig = es.eigenvalues().minCoeff();
        if (min_eig < -config_.positivity_abort_tol) {
            std::ostringstream os;
            os << "positivity breached at step " << step << " (t = " << t_fs
               << " fs): min eigenvalue " << min_eig;
            throw NumericalError(os.str());
        }
    }

private:
    const PropagatorConfig& config_;
};

// Interaction picture -> Schroedinger picture in the eigenbasis.
ComplexMatrix to_schroedinger(const ComplexMatrix& rho_int, const PolaronFrame& frame,
                              double t_fs) {
    const int n = frame.n_sites();
    ComplexMatrix out(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            out(a, b) = rho_int(a, b) *
                        std::exp(Complex(0.0, -units::kappa * frame.eps_gap(a, b) * t_fs));
    return out;
}

PolaronFrame frame_for_config(const SiteNetwork& net, const BathSpec& bath,
                              const KernelTables& kernels, const PropagatorConfig& config) {
    PolaronFrame frame = build_polaron_frame(net, bath, kernels);
    if (config.force_beta_zero) {
        SiteNetwork bare = net;
        bare.coupling_cm.setZero();
        PolaronFrame diag = frame;
        diag.h0_tilde = RealMatrix(frame.epsilon_tilde.asDiagonal());
        Eigen::SelfAdjointEigenSolver<RealMatrix> solver(diag.h0_tilde);
        diag.eigenvalues = solver.eigenvalues().reverse();
        diag.u = solver.eigenvectors().rowwise().reverse();
        // make the permutation columns positive
        for (Index c = 0; c < diag.u.cols(); ++c) {
            Index imax = 0;
            diag.u.col(c).cwiseAbs().maxCoeff(&imax);
            if (diag.u(imax, c) < 0.0) diag.u.col(c) = -diag.u.col(c);
        }
        frame = diag;
    }
    return frame;
}

struct Rk4Stages {
    ComplexMatrix r0, r1, r2;
    ComplexVector i0, i1, i2;
};

Trajectory run_rk4(const PolaronFrame& frame, const InitialState& initial,
                   const PropagatorConfig& config, Propagator tag,
                   const std::function<void(long, Rk4Stages&)>& stage_provider) {
    const int n = frame.n_sites();
    const Index n2 = static_cast<Index>(n) * n;
    const double h = config.dt_fs;
    const auto steps = static_cast<long>(std::llround(config.t_max_fs / h));
    InvariantMonitor monitor(config);

    Trajectory traj;
    traj.tag = tag;
    traj.frame = frame;
    traj.initial = initial;
    traj.times.resize(steps + 1);
    traj.rho.reserve(static_cast<std::size_t>(steps) + 1);

    ComplexVector y = flatten(initial.rho_eigen);
    traj.times[0] = 0.0;
    traj.rho.push_back(to_schroedinger(unflatten(y, n), frame, 0.0));

    Rk4Stages st;
    st.i0 = ComplexVector::Zero(n2);
    st.i1 = ComplexVector::Zero(n2);
    st.i2 = ComplexVector::Zero(n2);
    for (long step = 0; step < steps; ++step) {
        const double t = h * static_cast<double>(step);
        stage_provider(step, st);
        const ComplexVector k1 = st.r0 * y + st.i0;
        const ComplexVector k2 = st.r1 * (y + (0.5 * h) * k1) + st.i1;
        const ComplexVector k3 = st.r1 * (y + (0.5 * h) * k2) + st.i1;
        const ComplexVector k4 = st.r2 * (y + h * k3) + st.i2;
        y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        monitor.check(y, n, t + h, step + 1);
        traj.times[step + 1] = t + h;
        traj.rho.push_back(to_schroedinger(unflatten(y, n), frame, t + h));
    }
    return traj;
}

Trajectory propagate_tcl(const SiteNetwork& net, const KernelTables& kernels,
                         const PolaronFrame& frame, const InitialState& initial,
                         const PropagatorConfig& config) {
    const bool with_source = config.tag == Propagator::Full && config.include_inhomogeneous;
    HomRateEngine hom(kernels, frame, net);
    std::unique_ptr<InhomEngine> inhom;
    if (with_source)
        inhom = std::make_unique<InhomEngine>(kernels, frame, net, initial, config.dt_fs / 2.0,
                                              config.t_max_fs, config.xi_phase);

    ComplexMatrix r_next;      // generator at the step start, reused across steps
    ComplexVector i_next;
    bool primed = false;

    auto provider = [&](long step, Rk4Stages& st) {
        const double h = config.dt_fs;
        if (!primed) {
            st.r0 = assemble_generator(hom.materialize().gamma, frame, 0.0);
            if (inhom) st.i0 = assemble_source(*inhom, 0);
            primed = true;
        } else {
            st.r0 = r_next;
            if (inhom) st.i0 = i_next;
        }
        hom.advance(0.5 * h);
        st.r1 = assemble_generator(hom.materialize().gamma, frame, hom.time());
        if (inhom) st.i1 = assemble_source(*inhom, 2 * step + 1);
        hom.advance(0.5 * h);
        st.r2 = assemble_generator(hom.materialize().gamma, frame, hom.time());
        if (inhom) st.i2 = assemble_source(*inhom, 2 * step + 2);
        r_next = st.r2;
        if (inhom) i_next = st.i2;
    };
    return run_rk4(frame, initial, config, config.tag, provider);
}

Trajectory propagate_markov_family(const SiteNetwork& net, const BathSpec& bath,
                                   const KernelTables& kernels, const PolaronFrame& frame,
                                   const InitialState& initial,
                                   const PropagatorConfig& config) {
    std::array<ComplexMatrix, 4> gtilde;
    if (config.tag == Propagator::Redfield) {
        const int n = frame.n_sites();
        const Index n2 = static_cast<Index>(n) * n;
        for (auto& g : gtilde) g = ComplexMatrix::Zero(n2, n2);
        for (int mu = 0; mu < n; ++mu)
            for (int nu = 0; nu < n; ++nu) {
                const Index col = flat_index(mu, nu, n);
                const double eps = frame.eps_gap(mu, nu);
                const auto wc_p = weak_coupling_rates(net, bath, kernels, frame, eps, config.quad);
                const auto wc_m =
                    weak_coupling_rates(net, bath, kernels, frame, -eps, config.quad);
                const ComplexMatrix gw_p =
                    wc_p.gamma.cast<Complex>() - Complex(0, 1) * wc_p.shift.cast<Complex>();
                const ComplexMatrix gw_m =
                    wc_m.gamma.cast<Complex>() - Complex(0, 1) * wc_m.shift.cast<Complex>();
                gtilde[0].col(col) = -gw_p.col(col);
                gtilde[1].col(col) = gw_p.col(col);
                gtilde[2].col(col) = gw_m.col(col);
                gtilde[3].col(col) = -gw_m.col(col);
            }
    } else {
        gtilde = markov_rates(kernels, frame, net, config.markov_rel_decay).gtilde;
    }

    const bool constant_generator =
        config.tag == Propagator::Secular || config.tag == Propagator::Redfield;
    if (constant_generator)
        apply_secular_mask(gtilde, secular_mask(frame, config.secular_tol_cm));

    MarkovRates mr;
    mr.gtilde = gtilde;
    ComplexMatrix r_const;
    if (constant_generator)
        r_const = assemble_generator(markov_rates_at(mr, frame, 0.0).gamma, frame, 0.0);

    ComplexMatrix r_next;
    bool primed = false;
    auto provider = [&](long step, Rk4Stages& st) {
        const double h = config.dt_fs;
        const double t = h * static_cast<double>(step);
        if (constant_generator) {
            st.r0 = r_const;
            st.r1 = r_const;
            st.r2 = r_const;
            return;
        }
        if (!primed) {
            st.r0 = assemble_generator(markov_rates_at(mr, frame, t).gamma, frame, t);
            primed = true;
        } else {
            st.r0 = r_next;
        }
        st.r1 = assemble_generator(markov_rates_at(mr, frame, t + 0.5 * h).gamma, frame,
                                   t + 0.5 * h);
        st.r2 = assemble_generator(markov_rates_at(mr, frame, t + h).gamma, frame, t + h);
        r_next = st.r2;
    };
    return run_rk4(frame, initial, config, config.tag, provider);
}

Trajectory propagate_foerster_pauli(const SiteNetwork& net, const KernelTables& kernels,
                                    const PolaronFrame& frame, const InitialState& initial,
                                    const PropagatorConfig& config) {
    const int n = frame.n_sites();
    const auto& pairs = kernels.pairs();
    RealMatrix w = RealMatrix::Zero(n, n);
    for (std::size_t a = 0; a < pairs.size(); ++a) {
        const int m = pairs[a].m, nn = pairs[a].n;
        const double v2 = net.coupling_cm(m, nn) * net.coupling_cm(m, nn);
        // 2 kappa^2 V^2 Re Gamma^S evaluated at the receiving-minus-donor gap;
        // the factor 2 is the h.c. closure of the generator, which the
        // cross-check against the dressed propagator pins down
        const double k2 = 2.0 * units::kappa * units::kappa;
        const double k_mn =
            k2 * v2 *
            foerster_rate(kernels, static_cast<int>(a),
                          frame.epsilon_tilde[nn] - frame.epsilon_tilde[m])
                .real();
        const double k_nm =
            k2 * v2 *
            foerster_rate(kernels, static_cast<int>(a),
                          frame.epsilon_tilde[m] - frame.epsilon_tilde[nn])
                .real();
        w(nn, m) += k_mn;
        w(m, m) -= k_mn;
        w(m, nn) += k_nm;
        w(nn, nn) -= k_nm;
    }

    const double h = config.dt_fs;
    const auto steps = static_cast<long>(std::llround(config.t_max_fs / h));
    Trajectory traj;
    traj.tag = Propagator::Foerster;
    traj.frame = frame;
    traj.initial = initial;
    traj.times.resize(steps + 1);
    traj.rho.reserve(static_cast<std::size_t>(steps) + 1);

    RealVector p = initial.rho_polaron_site.diagonal().real();
    const ComplexMatrix u = frame.u.cast<Complex>();
    const ComplexMatrix off = initial.rho_polaron_site -
                              ComplexMatrix(initial.rho_polaron_site.diagonal().asDiagonal());
    auto store = [&](long k, const RealVector& pop) {
        ComplexMatrix site = off;
        site.diagonal() = pop.cast<Complex>();
        traj.times[k] = h * static_cast<double>(k);
        traj.rho.push_back(u.transpose() * site * u);
    };
    store(0, p);
    for (long step = 0; step < steps; ++step) {
        const RealVector k1 = w * p;
        const RealVector k2 = w * (p + 0.5 * h * k1);
        const RealVector k3 = w * (p + 0.5 * h * k2);
        const RealVector k4 = w * (p + h * k3);
        p += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        store(step + 1, p);
    }
    return traj;
}

} // namespace

Trajectory propagate(const SiteNetwork& net, const BathSpec& bath, const KernelTables& kernels,
                     const ComplexMatrix& rho0_lab, const PropagatorConfig& config) {
    const PolaronFrame frame = frame_for_config(net, bath, kernels, config);
    const InitialState initial = transform_initial_state(rho0_lab, frame);
    switch (config.tag) {
    case Propagator::Full:
    case Propagator::HomOnly:
        return propagate_tcl(net, kernels, frame, initial, config);
    case Propagator::Markov:
    case Propagator::Secular:
    case Propagator::Redfield:
        return propagate_markov_family(net, bath, kernels, frame, initial, config);
    case Propagator::Foerster:
        return propagate_foerster_pauli(net, kernels, frame, initial, config);
    }
    throw ConfigError("unhandled propagator tag");
}

Trajectory propagate(const SiteNetwork& net, const BathSpec& bath, const ComplexMatrix& rho0_lab,
                     const PropagatorConfig& config) {
    const auto [table_dt, table_t_max] = kernel_grid_for(config);
    const KernelTables kernels =
        build_kernel_tables(net, bath, table_dt, table_t_max, config.quad);
    return propagate(net, bath, kernels, rho0_lab, config);
}

} // namespace pme
