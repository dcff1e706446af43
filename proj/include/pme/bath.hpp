// bath.hpp — Renormalization factors and tabulated bath kernels

#pragma once

#include <string>
#include <vector>

#include "pme/model.hpp"
#include "pme/spatial.hpp"
#include "pme/types.hpp"

namespace pme {

// --- direct quadrature, single evaluation ---------------------------------

// beta_mn = exp(-1/2 int J/w^2 lambda_{mn,mn}(w) coth(w/2kT) dw).
// A divergent exponent is reported as beta = 0; *infrared_divergent is set when given.
double renormalization_factor(const SiteNetwork& net, const BathSpec& bath, int m, int n,
                              const quad::Settings& settings = {},
                              bool* infrared_divergent = nullptr);

// K_{mn,pq}(t) = int J/w^2 lambda_{mn,pq}(w) [coth(w/2kT) cos(kappa w t) - i sin(kappa w t)] dw.
// Negative t is served through K(-t) = conj(K(t)).
Complex phonon_correlation(const SiteNetwork& net, const BathSpec& bath, SitePair A, SitePair B,
                           double t_fs, const quad::Settings& settings = {});

// f_{ij,mn}(t) = exp(-int J/w^2 lambda_{ij,mn} coth cos) * exp(+i int J/w^2 lambda'_{ij,mn} sin).
Complex displaced_bath_correlation(const SiteNetwork& net, const BathSpec& bath, int i, int j,
                                   SitePair mn, double t_fs, const quad::Settings& settings = {});

// --- precomputed tables -----------------------------------------------------

struct KernelDiagnostics {
    Index quad_nodes{0};
    int quad_panels{0};
    double omega_max{0.0};
    bool infrared_divergent{false};
    double interp_check_rel_err{0.0};
};

// Uniform-grid tables of K, the displaced-bath exponents behind f, and the
// renormalization factors, for every coupled pair of the network. Off-grid
// access uses cubic interpolation; negative times use conjugation symmetry.
class KernelTables {
public:
    double dt() const { return dt_; }
    double t_max() const { return t_max_; }
    Index n_points() const { return n_points_; }
    int n_sites() const { return n_sites_; }
    const std::vector<SitePair>& pairs() const { return pairs_; }
    int pair_index(int m, int n) const; // index into pairs(), -1 if absent
    const KernelDiagnostics& diagnostics() const { return diag_; }
    const SpatialCorrelation& spatial() const { return spatial_; }
    double kT_cm() const { return kT_cm_; }

    double beta(int m, int n) const { return beta_(m, n); }
    const RealMatrix& beta_matrix() const { return beta_; }

    // Pair-resolved kernel by table index; |t| <= t_max required.
    Complex kernel_K(int a, int b, double t_fs) const;
    Complex displaced_f(int i, int j, int a, double t_fs) const;
    Complex displaced_f_prime(int i, int j, int a, double t_fs) const;

    // (Re K_aa(0) + Re K_bb(0)) / 2; beta_a beta_b e^{±K} == exp(-h ± K).
    double exponent_h(int a, int b) const;

    // Cache round trip; files carry a parameter hash and are ignored on mismatch.
    void save(const std::string& path) const;
    static bool load(const std::string& path, const SiteNetwork& net, const BathSpec& bath,
                     double dt_fs, double t_max_fs, const quad::Settings& settings,
                     KernelTables& out);
    std::uint64_t param_hash() const { return param_hash_; }

private:
    friend KernelTables build_kernel_tables(const SiteNetwork&, const BathSpec&, double, double,
                                            const quad::Settings&, bool);

    double interp(const RealVector& y, double t) const;

    double dt_{0.0}, t_max_{0.0}, kT_cm_{0.0};
    Index n_points_{0};
    int n_sites_{0};
    bool constant_lambda_{true};
    std::vector<SitePair> pairs_;
    std::vector<int> pair_lookup_; // n_sites^2 -> pair index
    RealMatrix beta_;
    SpatialCorrelation spatial_{CorrelationKind::Independent, SiteNetwork{}, 0.0};
    KernelDiagnostics diag_;
    std::uint64_t param_hash_{0};

    // Constant-lambda models share two base tables:
    //   phi_c(t) = int J/w^2 coth cos(kappa w t),  phi_s(t) = int J/w^2 sin(kappa w t).
    RealVector phi_c_, phi_s_;

    // Propagating modes: per pair-combination (a <= b) and per (i <= j, pair).
    std::vector<RealVector> pp_kc_, pp_ks_;            // indexed a*(a+1)/2+b style
    std::vector<RealVector> pp_fc_, pp_fs_;            // indexed (ij upper) * pairs + a
    int combo_index(int a, int b) const;
    int ij_index(int i, int j) const;
};

KernelTables build_kernel_tables(const SiteNetwork& net, const BathSpec& bath, double dt_fs,
                                 double t_max_fs, const quad::Settings& settings = {},
                                 bool verify_interpolation = true);

// FNV-1a hash of the model, bath, grid, and quadrature parameters.
std::uint64_t kernel_param_hash(const SiteNetwork& net, const BathSpec& bath, double dt_fs,
                                double t_max_fs, const quad::Settings& settings);

} // namespace pme
