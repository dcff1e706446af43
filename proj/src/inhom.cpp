#include "pme/inhom.hpp"

#include <cmath>

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

ComplexVector phase_diag(const PolaronFrame& frame, double t_fs) {
    const int n = frame.n_sites();
    ComplexVector d(n);
    for (int a = 0; a < n; ++a)
        d[a] = std::exp(Complex(0.0, units::kappa * frame.eigenvalues[a] * t_fs));
    return d;
}

// Trapezoid convolution sum_{s=0..k} q[s] x[k-s] ds using the reversed x array.
Complex conv_dot(const ComplexVector& q, const ComplexVector& xrev, Index k, double ds) {
    if (k <= 0) return {0.0, 0.0};
    const Index off = xrev.size() - 1 - k;
    Complex full = (q.head(k + 1).array() * xrev.segment(off, k + 1).array()).sum();
    full -= 0.5 * (q[0] * xrev[off] + q[k] * xrev[off + k]);
    return full * ds;
}

} // namespace

ComplexMatrix inhom_first_order(const KernelTables& kernels, const PolaronFrame& frame,
                                const SiteNetwork& net, int i, int j, double t_fs) {
    const PairWeights pw = make_pair_weights(net, frame);
    const int n = pw.n_sites;
    ComplexMatrix out = ComplexMatrix::Zero(n, n);
    for (int a = 0; a < pw.n_pairs(); ++a) {
        const auto& pair = pw.pairs[a];
        const Complex fac =
            kernels.beta(pair.m, pair.n) * (kernels.displaced_f(i, j, a, t_fs) - 1.0);
        out += fac * pw.w[a].cast<Complex>();
    }
    return out;
}

std::array<ComplexMatrix, 4> xi_tensors_direct(const KernelTables& kernels,
                                               const PolaronFrame& frame, const SiteNetwork& net,
                                               int i, int j, double t_fs, double ds_fs,
                                               XiPhase phase) {
    const PairWeights pw = make_pair_weights(net, frame);
    const int np = pw.n_pairs();
    const int n = pw.n_sites;
    const Index n2 = static_cast<Index>(n) * n;
    const RealVector eps = eigen_gaps(frame);

    std::array<ComplexMatrix, 4> out;
    for (auto& m : out) m = ComplexMatrix::Zero(n2, n2);
    const auto steps = static_cast<Index>(std::llround(t_fs / ds_fs));
    if (steps <= 0) return out;
    const double ds = t_fs / static_cast<double>(steps);

    std::vector<double> h(static_cast<std::size_t>(np) * np);
    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b) h[a * np + b] = kernels.exponent_h(a, b);

    for (int a = 0; a < np; ++a) {
        const Complex fa_t = kernels.displaced_f(i, j, a, t_fs);
        const Complex fpa_t = 1.0 / fa_t;
        for (int b = 0; b < np; ++b) {
            const double hab = h[a * np + b];
            const double e_h = std::exp(-hab);
            std::array<ComplexVector, 4> xi;
            for (auto& v : xi) v = ComplexVector::Zero(n2);
            for (Index k = 0; k <= steps; ++k) {
                const double s = ds * static_cast<double>(k);
                const double w = (k == 0 || k == steps) ? 0.5 * ds : ds;
                const Complex fb_s = kernels.displaced_f(i, j, b, s);
                const Complex fpb_s = 1.0 / fb_s;
                const Complex kab = kernels.kernel_K(a, b, t_fs - s);
                const Complex xm = std::exp(-hab - kab);
                const Complex xp = std::exp(-hab + kab);
                const std::array<Complex, 4> d{
                    (fa_t * fb_s - 1.0) * xm + e_h * (2.0 - fa_t - fb_s),
                    (fpa_t * fb_s - 1.0) * xp + e_h * (2.0 - fpa_t - fb_s),
                    (fa_t * fpb_s - 1.0) * xp + e_h * (2.0 - fa_t - fpb_s),
                    (fpa_t * fpb_s - 1.0) * xm + e_h * (2.0 - fpa_t - fpb_s)};
                for (int c = 0; c < 4; ++c) {
                    const double sigma = channel_traits[c].phase_sign;
                    for (Index q = 0; q < n2; ++q) {
                        const double arg = units::kappa * eps[q] *
                                           (phase == XiPhase::S ? s : t_fs);
                        xi[c][q] += w * std::exp(Complex(0.0, sigma * arg)) * d[c];
                    }
                }
            }
            for (int c = 0; c < 4; ++c)
                for (Index row = 0; row < n2; ++row) {
                    const double wa =
                        pw.w[a](static_cast<int>(row) / n, static_cast<int>(row) % n);
                    if (wa == 0.0) continue;
                    for (Index col = 0; col < n2; ++col) {
                        const double wb =
                            pw.w[b](static_cast<int>(col) / n, static_cast<int>(col) % n);
                        out[c](row, col) += wa * wb * xi[c][col];
                    }
                }
        }
    }
    return out;
}

InhomEngine::InhomEngine(const KernelTables& kernels, const PolaronFrame& frame,
                         const SiteNetwork& net, const InitialState& initial, double ds_fs,
                         double t_max_fs, XiPhase phase)
    : kernels_(&kernels), frame_(&frame), weights_(make_pair_weights(net, frame)), ds_(ds_fs),
      phase_mode_(phase), eps_mn_(eigen_gaps(frame)) {
    if (ds_ <= 0.0) throw DomainError("inhomogeneous engine needs a positive stage step");
    n_stages_ = static_cast<Index>(std::llround(t_max_fs / ds_)) + 1;
    const int np = n_pairs();
    const Index n2 = eps_mn_.size();
    const int n = weights_.n_sites;

    phase_plus_.resize(n2, n_stages_);
    for (Index q = 0; q < n2; ++q)
        for (Index k = 0; k < n_stages_; ++k)
            phase_plus_(q, k) =
                phase_mode_ == XiPhase::S
                    ? std::exp(Complex(0.0, units::kappa * eps_mn_[q] * ds_ * double(k)))
                    : Complex(1.0, 0.0);

    const int ncombo = np * (np + 1) / 2;
    x_minus_.resize(ncombo);
    x_plus_.resize(ncombo);
    x_minus_rev_.resize(ncombo);
    x_plus_rev_.resize(ncombo);
    exp_neg_h_.resize(ncombo);
    for (int a = 0; a < np; ++a)
        for (int b = 0; b <= a; ++b) {
            const int c = combo(b, a);
            const double h = kernels.exponent_h(a, b);
            exp_neg_h_[c] = std::exp(-h);
            x_minus_[c].resize(n_stages_);
            x_plus_[c].resize(n_stages_);
            for (Index k = 0; k < n_stages_; ++k) {
                const Complex kab = kernels.kernel_K(a, b, ds_ * double(k));
                x_minus_[c][k] = std::exp(-h - kab);
                x_plus_[c][k] = std::exp(-h + kab);
            }
            x_minus_rev_[c] = x_minus_[c].reverse();
            x_plus_rev_[c] = x_plus_[c].reverse();
        }

    for (auto& fam : cum_x_) fam.assign(static_cast<std::size_t>(ncombo) * n2, Complex(0, 0));
    for (auto& fam : ph_) fam.assign(static_cast<std::size_t>(n2), Complex(0, 0));

    // active initial-state elements
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (std::abs(initial.rho_polaron_site(i, j)) > 1e-14) active_.emplace_back(i, j);

    for (const auto& [i, j] : active_) {
        PerElement el;
        el.i = i;
        el.j = j;
        el.rho0 = initial.rho_polaron_site(i, j);
        el.f.resize(np);
        el.fprime.resize(np);
        el.q_plus_f.resize(static_cast<std::size_t>(np) * n2);
        el.q_minus_fp.resize(static_cast<std::size_t>(np) * n2);
        el.cum1_plus_f.assign(static_cast<std::size_t>(np) * n2, Complex(0, 0));
        el.cum1_minus_fp.assign(static_cast<std::size_t>(np) * n2, Complex(0, 0));
        for (int a = 0; a < np; ++a) {
            el.f[a].resize(n_stages_);
            el.fprime[a].resize(n_stages_);
            for (Index k = 0; k < n_stages_; ++k) {
                el.f[a][k] = kernels.displaced_f(i, j, a, ds_ * double(k));
                el.fprime[a][k] = 1.0 / el.f[a][k];
            }
            for (Index q = 0; q < n2; ++q) {
                ComplexVector qp(n_stages_), qm(n_stages_);
                for (Index k = 0; k < n_stages_; ++k) {
                    qp[k] = phase_plus_(q, k) * el.f[a][k];
                    qm[k] = std::conj(phase_plus_(q, k)) * el.fprime[a][k];
                }
                el.q_plus_f[qidx(a, q)] = std::move(qp);
                el.q_minus_fp[qidx(a, q)] = std::move(qm);
            }
        }
        elements_.push_back(std::move(el));
        p_ij_.push_back((frame.u.row(i).transpose() * frame.u.row(j)).cast<Complex>());
    }
    current_ = 0;
}

int InhomEngine::combo(int a, int b) const {
    if (a > b) std::swap(a, b);
    return b * (b + 1) / 2 + a;
}

void InhomEngine::advance_to(Index stage) {
    if (stage >= n_stages_) throw DomainError("inhomogeneous engine advanced beyond its grid");
    const int np = n_pairs();
    const Index n2 = eps_mn_.size();
    for (Index k = current_ + 1; k <= stage; ++k) {
        const double w = 0.5 * ds_;
        for (Index q = 0; q < n2; ++q) {
            ph_[0][q] += w * (phase_plus_(q, k - 1) + phase_plus_(q, k));
            ph_[1][q] += w * std::conj(phase_plus_(q, k - 1) + phase_plus_(q, k));
        }
        for (int a = 0; a < np; ++a)
            for (int b = 0; b <= a; ++b) {
                const int cb = combo(a, b);
                for (Index q = 0; q < n2; ++q) {
                    const Complex pm1 = std::conj(phase_plus_(q, k - 1));
                    const Complex pm0 = std::conj(phase_plus_(q, k));
                    const Complex pp1 = phase_plus_(q, k - 1);
                    const Complex pp0 = phase_plus_(q, k);
                    const std::size_t slot = static_cast<std::size_t>(cb) * n2 + q;
                    cum_x_[0][slot] +=
                        w * (pm1 * x_minus_[cb][k - 1] + pm0 * x_minus_[cb][k]);
                    cum_x_[1][slot] += w * (pm1 * x_plus_[cb][k - 1] + pm0 * x_plus_[cb][k]);
                    cum_x_[2][slot] += w * (pp1 * x_plus_[cb][k - 1] + pp0 * x_plus_[cb][k]);
                    cum_x_[3][slot] +=
                        w * (pp1 * x_minus_[cb][k - 1] + pp0 * x_minus_[cb][k]);
                }
            }
        for (auto& el : elements_)
            for (int a = 0; a < np; ++a)
                for (Index q = 0; q < n2; ++q) {
                    const std::size_t slot = qidx(a, q);
                    el.cum1_plus_f[slot] +=
                        w * (el.q_plus_f[slot][k - 1] + el.q_plus_f[slot][k]);
                    el.cum1_minus_fp[slot] +=
                        w * (el.q_minus_fp[slot][k - 1] + el.q_minus_fp[slot][k]);
                }
    }
    current_ = std::max(current_, stage);
}

std::array<Complex, 4> InhomEngine::xi_scalars(Index stage, const PerElement& el, int a, int b,
                                               Index q) const {
    const Index n2 = eps_mn_.size();
    const int cb = combo(a, b);
    const double e_h = exp_neg_h_[cb];
    const Complex fa_t = el.f[a][stage];
    const Complex fpa_t = el.fprime[a][stage];

    const Complex conv_pf_m = conv_dot(el.q_plus_f[qidx(b, q)], x_minus_rev_[cb], stage, ds_);
    const Complex conv_pf_p = conv_dot(el.q_plus_f[qidx(b, q)], x_plus_rev_[cb], stage, ds_);
    const Complex conv_mf_p = conv_dot(el.q_minus_fp[qidx(b, q)], x_plus_rev_[cb], stage, ds_);
    const Complex conv_mf_m = conv_dot(el.q_minus_fp[qidx(b, q)], x_minus_rev_[cb], stage, ds_);

    const std::size_t slot = static_cast<std::size_t>(cb) * n2 + q;
    const Complex pp = phase_plus_(q, stage);
    const Complex conv0_0 = pp * cum_x_[0][slot];
    const Complex conv0_1 = pp * cum_x_[1][slot];
    const Complex conv0_2 = std::conj(pp) * cum_x_[2][slot];
    const Complex conv0_3 = std::conj(pp) * cum_x_[3][slot];

    const Complex ph_p = ph_[0][q], ph_m = ph_[1][q];
    const Complex cum1_pf = el.cum1_plus_f[qidx(b, q)];
    const Complex cum1_mf = el.cum1_minus_fp[qidx(b, q)];

    std::array<Complex, 4> xi{
        fa_t * conv_pf_m - conv0_0 + e_h * ((2.0 - fa_t) * ph_p - cum1_pf),
        fpa_t * conv_pf_p - conv0_1 + e_h * ((2.0 - fpa_t) * ph_p - cum1_pf),
        fa_t * conv_mf_p - conv0_2 + e_h * ((2.0 - fa_t) * ph_m - cum1_mf),
        fpa_t * conv_mf_m - conv0_3 + e_h * ((2.0 - fpa_t) * ph_m - cum1_mf)};

    if (phase_mode_ == XiPhase::T) {
        const double t = ds_ * static_cast<double>(stage);
        const Complex et = std::exp(Complex(0.0, units::kappa * eps_mn_[q] * t));
        xi[0] *= et;
        xi[1] *= et;
        xi[2] *= std::conj(et);
        xi[3] *= std::conj(et);
    }
    return xi;
}

ComplexMatrix InhomEngine::source_matrix(Index stage) const {
    if (stage > current_) throw DomainError("inhomogeneous engine not advanced to this stage");
    const int np = n_pairs();
    const int n = weights_.n_sites;
    const Index n2 = eps_mn_.size();
    const double t = ds_ * static_cast<double>(stage);
    const ComplexVector d = phase_diag(*frame_, t);

    ComplexMatrix source = ComplexMatrix::Zero(n, n);
    for (std::size_t l = 0; l < elements_.size(); ++l) {
        const auto& el = elements_[l];

        // first-order term
        ComplexMatrix ups = ComplexMatrix::Zero(n, n);
        for (int a = 0; a < np; ++a) {
            const auto& pair = weights_.pairs[a];
            const Complex fac = kernels_->beta(pair.m, pair.n) * (el.f[a][stage] - 1.0);
            ups += fac * weights_.w[a].cast<Complex>();
        }
        ComplexMatrix w_ups = d.asDiagonal() * ups * d.conjugate().asDiagonal();
        source += Complex(0.0, -units::kappa) * el.rho0 *
                  (w_ups * p_ij_[l] - p_ij_[l] * w_ups);

        // second-order term: Y^c_a(mn) = sum_b w_b(mn) xi^c_{ab,mn};
        // workers own disjoint a-slots, so the result is schedule-independent
        std::array<std::vector<ComplexVector>, 4> y;
        for (auto& yc : y) yc.assign(np, ComplexVector::Zero(n2));
        parallel_for(static_cast<std::size_t>(np), [&](std::size_t a) {
            for (int b = 0; b < np; ++b)
                for (Index q = 0; q < n2; ++q) {
                    const double wb =
                        weights_.w[b](static_cast<int>(q) / n, static_cast<int>(q) % n);
                    if (wb == 0.0) continue;
                    const auto xi = xi_scalars(stage, el, static_cast<int>(a), b, q);
                    for (int c = 0; c < 4; ++c) y[c][static_cast<std::size_t>(a)][q] += wb * xi[c];
                }
        });
        for (int c = 0; c < 4; ++c) {
            const bool first_dag = channel_traits[c].first_dagger;
            const bool second_dag = channel_traits[c].second_dagger;
            for (int a = 0; a < np; ++a) {
                ComplexMatrix m(n, n);
                for (Index q = 0; q < n2; ++q) {
                    const int mu = static_cast<int>(q) / n, nu = static_cast<int>(q) % n;
                    if (second_dag)
                        m(nu, mu) = y[c][a][q];
                    else
                        m(mu, nu) = y[c][a][q];
                }
                const RealMatrix wmat =
                    first_dag ? RealMatrix(weights_.w[a].transpose()) : weights_.w[a];
                const ComplexMatrix w_phase =
                    d.asDiagonal() * wmat.cast<Complex>() * d.conjugate().asDiagonal();
                const ComplexMatrix mp = m * p_ij_[l];
                source += -units::kappa * units::kappa * el.rho0 *
                          (w_phase * mp - mp * w_phase);
            }
        }
    }
    return source + source.adjoint().eval();
}

std::array<ComplexMatrix, 4> InhomEngine::xi_tensors(Index stage, int i, int j) const {
    if (stage > current_) throw DomainError("inhomogeneous engine not advanced to this stage");
    const PerElement* el = nullptr;
    for (const auto& e : elements_)
        if (e.i == i && e.j == j) el = &e;
    if (!el) throw DomainError("requested initial-state element is not active");

    const int np = n_pairs();
    const int n = weights_.n_sites;
    const Index n2 = eps_mn_.size();
    std::array<ComplexMatrix, 4> out;
    for (auto& m : out) m = ComplexMatrix::Zero(n2, n2);
    for (int a = 0; a < np; ++a)
        for (int b = 0; b < np; ++b)
            for (Index q = 0; q < n2; ++q) {
                const double wb =
                    weights_.w[b](static_cast<int>(q) / n, static_cast<int>(q) % n);
                if (wb == 0.0) continue;
                const auto xi = xi_scalars(stage, *el, a, b, q);
                for (int c = 0; c < 4; ++c)
                    for (Index row = 0; row < n2; ++row) {
                        const double wa =
                            weights_.w[a](static_cast<int>(row) / n, static_cast<int>(row) % n);
                        if (wa != 0.0) out[c](row, q) += wa * wb * xi[c];
                    }
            }
    return out;
}

} // namespace pme
