// rates.hpp — Rate tensors of the generator: time-dependent, Markovian,
// secular-filtered, weak-coupling, and strong-coupling hopping limits

#pragma once

#include <array>
#include <vector>

#include "pme/bath.hpp"
#include "pme/polaron.hpp"
#include "pme/types.hpp"

namespace pme {

// The four commutator families of the generator share one index convention:
//   channel 0: [S_ab , S_mn rho],  kernel e^{-K}, rate phase e^{+i k eps_mn s}
//   channel 1: [S+_ab, S_mn rho],  kernel e^{+K}, rate phase e^{+i k eps_mn s}
//   channel 2: [S_ab , S+_mn rho], kernel e^{+K}, rate phase e^{-i k eps_mn s}
//   channel 3: [S+_ab, S+_mn rho], kernel e^{-K}, rate phase e^{-i k eps_mn s}
// Channels with S+_ab carry the conjugated ab phase in the generator.
struct ChannelTraits {
    double kernel_sign;
    double phase_sign;
    bool first_dagger;
    bool second_dagger;
};
inline constexpr std::array<ChannelTraits, 4> channel_traits{{
    {-1.0, +1.0, false, false},
    {+1.0, +1.0, true, false},
    {+1.0, -1.0, false, true},
    {-1.0, -1.0, true, true},
}};

// Eigenbasis weights w_A(a, b) = V_A u(m_A, a) u(n_A, b), one matrix per coupled pair.
struct PairWeights {
    std::vector<RealMatrix> w;
    std::vector<SitePair> pairs;
    int n_sites{0};

    int n_pairs() const { return static_cast<int>(pairs.size()); }
};
PairWeights make_pair_weights(const SiteNetwork& net, const PolaronFrame& frame);

// Scalar pair-pair correlators c^{s}_{AB}(u) = beta_A beta_B (e^{s K_AB(u)} - 1),
// evaluated as exp(-h_AB + s K) - exp(-h_AB) so large exponents never overflow.
class PairCorrelators {
public:
    PairCorrelators(const KernelTables& kernels, const std::vector<SitePair>& pairs);

    int n_pairs() const { return npairs_; }
    Index grid_points() const { return grid_minus_[0].size(); }
    double grid_dt() const { return dt_; }

    Complex at(int a, int b, double kernel_sign, double u_fs) const; // off-grid via tables
    const ComplexVector& grid(int a, int b, double kernel_sign) const;

private:
    int combo(int a, int b) const;
    const KernelTables* kernels_;
    int npairs_{0};
    double dt_{0.0};
    std::vector<ComplexVector> grid_minus_, grid_plus_;
    std::vector<double> h_;
};

// One of the four two-time correlator tensors at lag tau, indexed [(ab),(mn)].
ComplexMatrix hom_correlator(const KernelTables& kernels, const PolaronFrame& frame,
                             const SiteNetwork& net, int channel, double tau_fs);

// Rate tensors at a fixed time with their mn phases applied; units (1/cm)^2 fs,
// one kappa^2 short of 1/fs which the generator assembly supplies.
struct HomRates {
    std::array<ComplexMatrix, 4> gamma;
    double t_fs{0.0};
};

// Cumulative integrator for the time-dependent rates,
//   Gt^{c}_{AB,mn}(t) = int_0^t e^{-i sigma_c kappa eps_mn u} c^{c}_{AB}(u) du,
// advanced by one Simpson panel per call; cost per step is time-independent.
class HomRateEngine {
public:
    HomRateEngine(const KernelTables& kernels, const PolaronFrame& frame, const SiteNetwork& net);

    double time() const { return t_; }
    void advance(double delta_t_fs);
    HomRates materialize() const;

    const PairWeights& weights() const { return weights_; }
    const PairCorrelators& correlators() const { return correlators_; }

private:
    Complex cumulative(int channel, int combo_ab, Index mn) const;
    const PolaronFrame* frame_;
    PairWeights weights_;
    PairCorrelators correlators_;
    RealVector eps_mn_; // N^2 vector of eigenvalue gaps
    double t_{0.0};
    std::array<ComplexMatrix, 4> gt_; // (pair-combo) x (mn)
};

// Direct fixed-grid quadrature of the same integrals, used as an oracle and by
// the Markovian limit.
HomRates hom_rates_direct(const KernelTables& kernels, const PolaronFrame& frame,
                          const SiteNetwork& net, double t_fs, double du_fs);

struct MarkovRates {
    std::array<ComplexMatrix, 4> gtilde; // constant tensors, mn phases NOT applied
    double tau_star_fs{0.0};
    double tail_bound{0.0};
};

// Infinite-horizon rates, truncated where every pair correlator has decayed
// below rel_decay of its initial magnitude. Throws NumericalError if the
// kernel table ends before that happens.
MarkovRates markov_rates(const KernelTables& kernels, const PolaronFrame& frame,
                         const SiteNetwork& net, double rel_decay = 1e-6);

// Markovian rate tensors at time t (mn phases applied), same layout as HomRates.
HomRates markov_rates_at(const MarkovRates& rates, const PolaronFrame& frame, double t_fs);

// keep[c](ab, mn) selects the generator terms whose total phase frequency
// vanishes within tol.
struct SecularMask {
    std::array<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>, 4> keep;
    int survivors(int channel) const { return static_cast<int>(keep[channel].count()); }
};
SecularMask secular_mask(const PolaronFrame& frame, double tol_cm);

void apply_secular_mask(std::array<ComplexMatrix, 4>& gamma, const SecularMask& mask);

// Single-phonon rate and bath-induced shift tensors at transition energy eps,
// from the first-order kernel expansion; Gamma^W = gamma - i shift.
struct WeakCouplingTensors {
    RealMatrix gamma;
    RealMatrix shift;
    double eps_cm{0.0};
};
WeakCouplingTensors weak_coupling_rates(const SiteNetwork& net, const BathSpec& bath,
                                        const KernelTables& kernels, const PolaronFrame& frame,
                                        double eps_cm, const quad::Settings& settings = {});

struct FoersterDiagnostics {
    double tau_star_fs{0.0};
    double baseline{0.0}; // e^{-Re K(0)}, dropped analytically after truncation
};

// Strong-coupling transfer kernel Gamma^S(w) = int_0^inf e^{-i kappa w s}
// exp(-K_aa(0) + K_aa(s)) ds for the coupled pair with table index `pair`.
// Refuses when the integrand baseline cannot be separated reliably.
Complex foerster_rate(const KernelTables& kernels, int pair, double omega_cm,
                      FoersterDiagnostics* diag = nullptr);

} // namespace pme
