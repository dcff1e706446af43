#include "pme/rates.hpp"

#include <cmath>
#include <sstream>

#include "pme/errors.hpp"
#include "pme/units.hpp"

namespace pme {

namespace {

RealVector eigen_gaps(const PolaronFrame& frame) {
    const int n = frame.n_sites();
    RealVector eps(static_cast<Index>(n) * n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) eps[static_cast<Index>(a) * n + b] = frame.eps_gap(a, b);
    return eps;
}

} // namespace

PairWeights make_pair_weights(const SiteNetwork& net, const PolaronFrame& frame) {
    PairWeights pw;
    pw.pairs = net.coupled_pairs();
    pw.n_sites = net.n_sites();
    pw.w.reserve(pw.pairs.size());
    for (const auto& pair : pw.pairs) {
        const double v = net.coupling_cm(pair.m, pair.n);
        pw.w.push_back(v * frame.u.row(pair.m).transpose() * frame.u.row(pair.n));
    }
    return pw;
}

PairCorrelators::PairCorrelators(const KernelTables& kernels, const std::vector<SitePair>& pairs)
    : kernels_(&kernels), npairs_(static_cast<int>(pairs.size())), dt_(kernels.dt()) {
    const int ncombo = npairs_ * (npairs_ + 1) / 2;
    grid_minus_.resize(ncombo);
    grid_plus_.resize(ncombo);
    h_.resize(ncombo);
    const Index npts = kernels.n_points();
    for (int a = 0; a < npairs_; ++a)
        for (int b = 0; b <= a; ++b) {
            const int c = combo(b, a);
            h_[c] = kernels.exponent_h(a, b);
            grid_minus_[c].resize(npts);
            grid_plus_[c].resize(npts);
            const double base = std::exp(-h_[c]);
            for (Index k = 0; k < npts; ++k) {
                const Complex kab = kernels.kernel_K(a, b, dt_ * static_cast<double>(k));
                grid_minus_[c][k] = std::exp(-h_[c] - kab) - base;
                grid_plus_[c][k] = std::exp(-h_[c] + kab) - base;
            }
        }
}

int PairCorrelators::combo(int a, int b) const {
    if (a > b) std::swap(a, b);
    return b * (b + 1) / 2 + a;
}

const ComplexVector& PairCorrelators::grid(int a, int b, double kernel_sign) const {
    return kernel_sign < 0.0 ? grid_minus_[combo(a, b)] : grid_plus_[combo(a, b)];
}

Complex PairCorrelators::at(int a, int b, double kernel_sign, double u_fs) const {
    const double idx = u_fs / dt_;
    const auto k = static_cast<Index>(std::llround(idx));
    const auto& g = grid(a, b, kernel_sign);
    if (k >= 0 && k < g.size() && std::abs(idx - static_cast<double>(k)) < 1e-9)
        return g[k];
    const int c = combo(a, b);
    const Complex kab = kernels_->kernel_K(a, b, u_fs);
    return std::exp(-h_[c] + kernel_sign * kab) - std::exp(-h_[c]);
}

ComplexMatrix hom_correlator(const KernelTables& kernels, const PolaronFrame& frame,
                             const SiteNetwork& net, int channel, double tau_fs) {
    if (channel < 0 || channel > 3) throw DomainError("correlator channel must be 0..3");
    const PairWeights pw = make_pair_weights(net, frame);
    const PairCorrelators corr(kernels, pw.pairs);
    const int n = pw.n_sites;
    const Index n2 = static_cast<Index>(n) * n;
    const auto flat = [&](const RealMatrix& w) {
        ComplexVector v(n2);
        for (Index q = 0; q < n2; ++q)
            v[q] = w(static_cast<int>(q) / n, static_cast<int>(q) % n);
        return v;
    };
    ComplexMatrix out = ComplexMatrix::Zero(n2, n2);
    const double sign = channel_traits[channel].kernel_sign;
    for (int a = 0; a < pw.n_pairs(); ++a) {
        const ComplexVector wa = flat(pw.w[a]);
        for (int b = 0; b < pw.n_pairs(); ++b)
            out.noalias() += corr.at(a, b, sign, tau_fs) * wa * flat(pw.w[b]).transpose();
    }
    return out;
}

HomRateEngine::HomRateEngine(const KernelTables& kernels, const PolaronFrame& frame,
                             const SiteNetwork& net)
    : frame_(&frame), weights_(make_pair_weights(net, frame)),
      correlators_(kernels, weights_.pairs), eps_mn_(eigen_gaps(frame)) {
    const int ncombo = weights_.n_pairs() * weights_.n_pairs();
    for (auto& g : gt_) g = ComplexMatrix::Zero(ncombo, eps_mn_.size());
}

void HomRateEngine::advance(double delta_t_fs) {
    const int np = weights_.n_pairs();
    const Index n2 = eps_mn_.size();
    const double u0 = t_, u1 = t_ + 0.5 * delta_t_fs, u2 = t_ + delta_t_fs;
    const double w0 = delta_t_fs / 6.0, w1 = 4.0 * delta_t_fs / 6.0, w2 = delta_t_fs / 6.0;

    // e^{-i kappa eps u} at the three Simpson nodes, per mn gap
    ComplexVector p0(n2), p1(n2), p2(n2);
    for (Index q = 0; q < n2; ++q) {
        p0[q] = std::exp(Complex(0.0, -units::kappa * eps_mn_[q] * u0));
        p1[q] = std::exp(Complex(0.0, -units::kappa * eps_mn_[q] * u1));
        p2[q] = std::exp(Complex(0.0, -units::kappa * eps_mn_[q] * u2));
    }

    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) {
            const int combo = a * np + b;
            const Complex cm0 = correlators_.at(a, b, -1.0, u0);
            const Complex cm1 = correlators_.at(a, b, -1.0, u1);
            const Complex cm2 = correlators_.at(a, b, -1.0, u2);
            const Complex cp0 = correlators_.at(a, b, +1.0, u0);
            const Complex cp1 = correlators_.at(a, b, +1.0, u1);
            const Complex cp2 = correlators_.at(a, b, +1.0, u2);
            for (Index q = 0; q < n2; ++q) {
                // sigma = +1 channels use e^{-i eps u}; sigma = -1 its conjugate
                const Complex fm_p = w0 * p0[q] * cm0 + w1 * p1[q] * cm1 + w2 * p2[q] * cm2;
                const Complex fp_p = w0 * p0[q] * cp0 + w1 * p1[q] * cp1 + w2 * p2[q] * cp2;
                const Complex fm_m = w0 * std::conj(p0[q]) * cm0 + w1 * std::conj(p1[q]) * cm1 +
                                     w2 * std::conj(p2[q]) * cm2;
                const Complex fp_m = w0 * std::conj(p0[q]) * cp0 + w1 * std::conj(p1[q]) * cp1 +
                                     w2 * std::conj(p2[q]) * cp2;
                gt_[0](combo, q) += fm_p;
                gt_[1](combo, q) += fp_p;
                gt_[2](combo, q) += fp_m;
                gt_[3](combo, q) += fm_m;
            }
        }
    t_ = u2;
}

HomRates HomRateEngine::materialize() const {
    const int np = weights_.n_pairs();
    const int n = weights_.n_sites;
    const Index n2 = static_cast<Index>(n) * n;
    HomRates out;
    out.t_fs = t_;
    for (int c = 0; c < 4; ++c) {
        out.gamma[c] = ComplexMatrix::Zero(n2, n2);
        // H_a(mn) = sum_b w_b(mn) Gt(a, b, mn), then gamma = sum_a w_a (x) (phase o H_a)
        for (int a = 0; a < np; ++a) {
            ComplexVector ha = ComplexVector::Zero(n2);
            for (int b = 0; b < np; ++b) {
                const int combo = a * np + b;
                for (Index q = 0; q < n2; ++q) {
                    const int mu = static_cast<int>(q) / n, nu = static_cast<int>(q) % n;
                    ha[q] += weights_.w[b](mu, nu) * gt_[c](combo, q);
                }
            }
            ComplexVector wa(n2);
            for (Index q = 0; q < n2; ++q)
                wa[q] = weights_.w[a](static_cast<int>(q) / n, static_cast<int>(q) % n);
            ComplexVector phased(n2);
            const double sigma = channel_traits[c].phase_sign;
            for (Index q = 0; q < n2; ++q)
                phased[q] =
                    ha[q] * std::exp(Complex(0.0, sigma * units::kappa * eps_mn_[q] * t_));
            out.gamma[c].noalias() += wa * phased.transpose();
        }
    }
    return out;
}

HomRates hom_rates_direct(const KernelTables& kernels, const PolaronFrame& frame,
                          const SiteNetwork& net, double t_fs, double du_fs) {
    HomRateEngine engine(kernels, frame, net);
    const auto steps = static_cast<long>(std::ceil(t_fs / du_fs - 1e-12));
    const double du = t_fs / static_cast<double>(steps);
    for (long k = 0; k < steps; ++k) engine.advance(du);
    return engine.materialize();
}

MarkovRates markov_rates(const KernelTables& kernels, const PolaronFrame& frame,
                         const SiteNetwork& net, double rel_decay) {
    const PairWeights pw = make_pair_weights(net, frame);
    const PairCorrelators corr(kernels, pw.pairs);
    const int np = pw.n_pairs();
    const Index npts = corr.grid_points();
    const double dt = corr.grid_dt();

    // Find the horizon after which every correlator stays below rel_decay of c(0).
    Index tau_idx = 0;
    double tail_bound = 0.0;
    for (int a = 0; a < np; ++a)
        for (int b = 0; b <= a; ++b)
            for (const double sign : {-1.0, +1.0}) {
                const auto& g = corr.grid(a, b, sign);
                const double c0 = std::abs(g[0]);
                if (c0 < 1e-300) continue;
                Index k = npts - 1;
                double running_max = 0.0;
                Index first_ok = npts;
                for (; k >= 0; --k) {
                    running_max = std::max(running_max, std::abs(g[k]));
                    if (running_max <= rel_decay * c0)
                        first_ok = k;
                    else
                        break;
                }
                if (first_ok >= npts) {
                    std::ostringstream os;
                    os << "correlator for pair combination (" << a << "," << b
                       << ") has not decayed below " << rel_decay
                       << " of its initial magnitude within the kernel table (t_max "
                       << kernels.t_max() << " fs); Markovian rates refused";
                    throw NumericalError(os.str());
                }
                tau_idx = std::max(tau_idx, first_ok);
                tail_bound = std::max(tail_bound, std::abs(g[first_ok]) * dt *
                                                      static_cast<double>(npts - first_ok));
            }
    if (tau_idx % 2 == 1) ++tau_idx; // composite Simpson needs an even interval count
    tau_idx = std::min(tau_idx, npts - 1);

    const RealVector eps = eigen_gaps(frame);
    const Index n2 = eps.size();
    MarkovRates out;
    out.tau_star_fs = dt * static_cast<double>(tau_idx);
    out.tail_bound = tail_bound;

    // Gtilde^c[(combo), mn] by composite Simpson on the table grid, then contract.
    const int n = pw.n_sites;
    for (int c = 0; c < 4; ++c) out.gtilde[c] = ComplexMatrix::Zero(n2, n2);
    for (int a = 0; a < np; ++a) {
        std::array<ComplexMatrix, 4> ha;
        for (auto& h : ha) h = ComplexMatrix::Zero(1, n2);
        for (int b = 0; b < np; ++b) {
            const auto& gm = corr.grid(a, b, -1.0);
            const auto& gp = corr.grid(a, b, +1.0);
            for (Index q = 0; q < n2; ++q) {
                Complex sm_p = 0.0, sp_p = 0.0, sm_m = 0.0, sp_m = 0.0;
                for (Index k = 0; k <= tau_idx; ++k) {
                    double w = (k == 0 || k == tau_idx) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
                    w *= dt / 3.0;
                    const Complex ph =
                        std::exp(Complex(0.0, -units::kappa * eps[q] * dt * double(k)));
                    sm_p += w * ph * gm[k];
                    sp_p += w * ph * gp[k];
                    sm_m += w * std::conj(ph) * gm[k];
                    sp_m += w * std::conj(ph) * gp[k];
                }
                const int mu = static_cast<int>(q) / n, nu = static_cast<int>(q) % n;
                const double wb = pw.w[b](mu, nu);
                ha[0](0, q) += wb * sm_p;
                ha[1](0, q) += wb * sp_p;
                ha[2](0, q) += wb * sp_m;
                ha[3](0, q) += wb * sm_m;
            }
        }
        ComplexVector wa(n2);
        for (Index q = 0; q < n2; ++q)
            wa[q] = pw.w[a](static_cast<int>(q) / n, static_cast<int>(q) % n);
        for (int c = 0; c < 4; ++c) out.gtilde[c].noalias() += wa * ha[c];
    }
    return out;
}

HomRates markov_rates_at(const MarkovRates& rates, const PolaronFrame& frame, double t_fs) {
    const RealVector eps = eigen_gaps(frame);
    HomRates out;
    out.t_fs = t_fs;
    for (int c = 0; c < 4; ++c) {
        out.gamma[c] = rates.gtilde[c];
        const double sigma = channel_traits[c].phase_sign;
        for (Index q = 0; q < eps.size(); ++q)
            out.gamma[c].col(q) *=
                std::exp(Complex(0.0, sigma * units::kappa * eps[q] * t_fs));
    }
    return out;
}

SecularMask secular_mask(const PolaronFrame& frame, double tol_cm) {
    if (tol_cm <= 0.0) throw DomainError("secular tolerance must be positive");
    const int n = frame.n_sites();
    const Index n2 = static_cast<Index>(n) * n;
    SecularMask mask;
    for (int c = 0; c < 4; ++c) {
        mask.keep[c].resize(n2, n2);
        for (Index row = 0; row < n2; ++row) {
            const int a = static_cast<int>(row) / n, b = static_cast<int>(row) % n;
            const double eps_ab =
                channel_traits[c].first_dagger ? frame.eps_gap(b, a) : frame.eps_gap(a, b);
            for (Index col = 0; col < n2; ++col) {
                const int m = static_cast<int>(col) / n, nu = static_cast<int>(col) % n;
                const double eps_mn = channel_traits[c].second_dagger ? frame.eps_gap(nu, m)
                                                                      : frame.eps_gap(m, nu);
                mask.keep[c](row, col) = std::abs(eps_ab + eps_mn) < tol_cm;
            }
        }
    }
    return mask;
}

void apply_secular_mask(std::array<ComplexMatrix, 4>& gamma, const SecularMask& mask) {
    for (int c = 0; c < 4; ++c)
        gamma[c] = mask.keep[c].select(gamma[c], ComplexMatrix::Zero(gamma[c].rows(),
                                                                     gamma[c].cols()));
}

namespace {

// Integral of f over [0, omega_max] excluding (lo, hi); the window edges are
// inserted as panel boundaries so no panel straddles the cut.
template <typename F>
double integrate_excluding(const SpectralDensity& sd, double kT, const quad::Settings& settings,
                           double lo, double hi, F&& f) {
    auto bounds = bath_panel_plan(sd, kT, settings);
    const double omega_max = bounds.back();
    if (hi > lo && lo < omega_max) {
        if (lo > 0.0) bounds.push_back(lo);
        if (hi < omega_max) bounds.push_back(hi);
        std::sort(bounds.begin(), bounds.end());
        bounds.erase(std::unique(bounds.begin(), bounds.end(),
                                 [&](double p, double q) { return q - p < omega_max * 1e-12; }),
                     bounds.end());
    }
    const auto ns = quad::assemble_nodes(bounds, settings.nodes_per_panel);
    const double mid = 0.5 * (lo + hi);
    double acc = 0.0;
    for (Index k = 0; k < ns.omega.size(); ++k) {
        const double w = ns.omega[k];
        if (hi > lo && std::abs(w - mid) < 0.5 * (hi - lo)) continue;
        acc += ns.weight[k] * f(w);
    }
    return acc;
}

} // namespace

WeakCouplingTensors weak_coupling_rates(const SiteNetwork& net, const BathSpec& bath,
                                        const KernelTables& kernels, const PolaronFrame& frame,
                                        double eps_cm, const quad::Settings& settings) {
    const PairWeights pw = make_pair_weights(net, frame);
    const SpatialCorrelation& sc = kernels.spatial();
    const int np = pw.n_pairs();
    const int n = pw.n_sites;
    const Index n2 = static_cast<Index>(n) * n;
    const double kT = bath.kT_cm;
    const double abs_eps = std::abs(eps_cm);

    WeakCouplingTensors out;
    out.eps_cm = eps_cm;
    out.gamma = RealMatrix::Zero(n2, n2);
    out.shift = RealMatrix::Zero(n2, n2);

    // gamma spectral factor: (pi / 2 kappa) J(|e|)/e^2 (coth(|e|/2kT) - sign(e)),
    // the odd spectral extension that keeps both emission and absorption positive
    double gamma_scalar = 0.0;
    if (abs_eps > 0.0) {
        const double q = coth_thermal(abs_eps, kT) - (eps_cm > 0.0 ? 1.0 : -1.0);
        gamma_scalar = (M_PI / (2.0 * units::kappa)) * bath.sd(abs_eps) / (eps_cm * eps_cm) * q;
    }

    // Principal-value shift integrand per pair combination; lambda may be
    // frequency dependent so the window pieces are evaluated per combination.
    const double delta = (abs_eps > 0.0) ? std::min(abs_eps / 2.0, std::max(1.0, 0.05 * abs_eps))
                                         : 0.0;
    const auto shift_integrand = [&](int a, int b, double w) {
        const auto& A = pw.pairs[a];
        const auto& B = pw.pairs[b];
        const double lam = sc.lambda(A.m, A.n, B.m, B.n, w);
        return bath.sd(w) / (w * w) * lam * (w - eps_cm * coth_thermal(w, kT)) /
               (w * w - eps_cm * eps_cm);
    };

    RealVector gl_x, gl_w;
    quad::gauss_legendre(32, gl_x, gl_w);

    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) {
            const auto& A = pw.pairs[a];
            const auto& B = pw.pairs[b];
            const double bb = kernels.beta(A.m, A.n) * kernels.beta(B.m, B.n);
            if (bb == 0.0) continue;

            double s_val = integrate_excluding(bath.sd, kT, settings, abs_eps - delta,
                                               abs_eps + delta,
                                               [&](double w) { return shift_integrand(a, b, w); });
            if (delta > 0.0) {
                // symmetric window: int_0^delta [g(e+h) - g(e-h)] / h dh with
                // g(w) = (w - |e|) * integrand(w), smooth through the pole
                for (Index k = 0; k < gl_x.size(); ++k) {
                    const double h = 0.5 * delta * (gl_x[k] + 1.0);
                    const double wgt = 0.5 * delta * gl_w[k];
                    const double gp = shift_integrand(a, b, abs_eps + h) * h;
                    const double gm = shift_integrand(a, b, abs_eps - h) * (-h);
                    s_val += wgt * (gp - gm) / h;
                }
            }
            s_val /= units::kappa;

            const double lam_eps =
                (abs_eps > 0.0) ? sc.lambda(A.m, A.n, B.m, B.n, abs_eps) : 0.0;
            const double g_val = gamma_scalar * lam_eps;

            for (Index row = 0; row < n2; ++row) {
                const double wa =
                    pw.w[a](static_cast<int>(row) / n, static_cast<int>(row) % n);
                if (wa == 0.0) continue;
                for (Index col = 0; col < n2; ++col) {
                    const double wb =
                        pw.w[b](static_cast<int>(col) / n, static_cast<int>(col) % n);
                    out.gamma(row, col) += wa * wb * bb * g_val;
                    out.shift(row, col) += wa * wb * bb * s_val;
                }
            }
        }
    return out;
}

Complex foerster_rate(const KernelTables& kernels, int pair, double omega_cm,
                      FoersterDiagnostics* diag) {
    if (pair < 0 || pair >= static_cast<int>(kernels.pairs().size()))
        throw DomainError("foerster_rate: pair index out of range");
    const Index npts = kernels.n_points();
    const double dt = kernels.dt();
    const double k0 = kernels.kernel_K(pair, pair, 0.0).real();
    const double baseline = std::exp(-k0);
    if (diag) diag->baseline = baseline;
    if (baseline > 1e-5)
        throw NumericalError(
            "foerster_rate: bath damping too weak to separate the non-decaying baseline "
            "(e^{-K(0)} = " +
            std::to_string(baseline) + ")");

    // Truncate where the decaying part e^{-K(0)} (e^{K(s)} - 1) stays below
    // 1e-6 of its peak (1 - e^{-K(0)}).
    const double floor = 1e-6 * (1.0 - baseline);
    Index tau_idx = npts;
    double running_max = 0.0;
    for (Index k = npts - 1; k >= 0; --k) {
        const Complex g =
            std::exp(-k0 + kernels.kernel_K(pair, pair, dt * double(k))) - baseline;
        running_max = std::max(running_max, std::abs(g));
        if (running_max <= floor)
            tau_idx = k;
        else
            break;
    }
    if (tau_idx >= npts)
        throw NumericalError(
            "foerster_rate: e^{K(s)} has not settled within the kernel table; extend t_max");
    if (tau_idx % 2 == 1) ++tau_idx;
    tau_idx = std::min(tau_idx, npts - 1);
    if (diag) diag->tau_star_fs = dt * static_cast<double>(tau_idx);

    // Simpson of e^{-i k w s} (e^{-K(0)+K(s)} - e^{-K(0)}); the constant baseline
    // transform is dropped (its real part vanishes for w != 0 after truncation).
    Complex acc = 0.0;
    for (Index k = 0; k <= tau_idx; ++k) {
        double w = (k == 0 || k == tau_idx) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
        w *= dt / 3.0;
        const double s = dt * static_cast<double>(k);
        const Complex g =
            std::exp(-k0 + kernels.kernel_K(pair, pair, s)) - baseline;
        acc += w * std::exp(Complex(0.0, -units::kappa * omega_cm * s)) * g;
    }
    return acc;
}

} // namespace pme
