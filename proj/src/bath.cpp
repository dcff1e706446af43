#include "pme/bath.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include "pme/errors.hpp"
#include "pme/units.hpp"

namespace pme {

namespace {

constexpr double divergence_exponent_cap = 300.0;

// Shared node-level data for all bath integrals.
struct NodeData {
    RealVector omega;   // 1/cm
    RealVector x;       // kappa * omega, rad/fs
    RealVector w_jcoth; // weight * J/w^2 * coth(w/2kT)
    RealVector w_j;     // weight * J/w^2
    Index nodes{0};
    int panels{0};
    double omega_max{0.0};
};

NodeData make_node_data(const BathSpec& bath, const quad::Settings& settings) {
    const auto ns = bath_nodes(bath.sd, bath.kT_cm, settings);
    NodeData nd;
    nd.omega = ns.omega;
    nd.nodes = ns.omega.size();
    nd.panels = ns.panels;
    nd.omega_max = ns.omega_max;
    nd.x = units::kappa * ns.omega;
    nd.w_jcoth.resize(nd.nodes);
    nd.w_j.resize(nd.nodes);
    for (Index k = 0; k < nd.nodes; ++k) {
        const double w = ns.omega[k];
        const double jw2 = bath.sd(w) / (w * w);
        nd.w_j[k] = ns.weight[k] * jw2;
        nd.w_jcoth[k] = nd.w_j[k] * coth_thermal(w, bath.kT_cm);
    }
    return nd;
}

quad::Settings with_t_ref(const quad::Settings& settings, double t_fs) {
    quad::Settings s = settings;
    s.t_ref_fs = std::max(s.t_ref_fs, std::abs(t_fs));
    return s;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void put(std::ostream& os, const void* p, std::size_t n) {
    os.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

bool get(std::istream& is, void* p, std::size_t n) {
    is.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    return static_cast<bool>(is);
}

void put_vec(std::ostream& os, const RealVector& v) {
    const std::uint64_t n = static_cast<std::uint64_t>(v.size());
    put(os, &n, sizeof(n));
    put(os, v.data(), sizeof(double) * v.size());
}

bool get_vec(std::istream& is, RealVector& v) {
    std::uint64_t n = 0;
    if (!get(is, &n, sizeof(n))) return false;
    v.resize(static_cast<Index>(n));
    return get(is, v.data(), sizeof(double) * n);
}

} // namespace

double renormalization_factor(const SiteNetwork& net, const BathSpec& bath, int m, int n,
                              const quad::Settings& settings, bool* infrared_divergent) {
    if (m == n) throw DomainError("renormalization factor needs two distinct sites");
    if (infrared_divergent) *infrared_divergent = false;
    const SpatialCorrelation sc(bath.correlation, net, bath.v_ph_nm_fs);
    const NodeData nd = make_node_data(bath, settings);
    double expo = 0.0;
    for (Index k = 0; k < nd.nodes; ++k)
        expo += nd.w_jcoth[k] * sc.lambda(m, n, m, n, nd.omega[k]);
    expo *= 0.5;
    if (expo > divergence_exponent_cap) {
        if (infrared_divergent) *infrared_divergent = true;
        return 0.0;
    }
    return std::exp(-expo);
}

Complex phonon_correlation(const SiteNetwork& net, const BathSpec& bath, SitePair A, SitePair B,
                           double t_fs, const quad::Settings& settings) {
    if (t_fs < 0.0) return std::conj(phonon_correlation(net, bath, A, B, -t_fs, settings));
    const SpatialCorrelation sc(bath.correlation, net, bath.v_ph_nm_fs);
    const NodeData nd = make_node_data(bath, with_t_ref(settings, t_fs));
    double re = 0.0, im = 0.0;
    for (Index k = 0; k < nd.nodes; ++k) {
        const double lam = sc.lambda(A.m, A.n, B.m, B.n, nd.omega[k]);
        re += nd.w_jcoth[k] * lam * std::cos(nd.x[k] * t_fs);
        im -= nd.w_j[k] * lam * std::sin(nd.x[k] * t_fs);
    }
    return {re, im};
}

Complex displaced_bath_correlation(const SiteNetwork& net, const BathSpec& bath, int i, int j,
                                   SitePair mn, double t_fs, const quad::Settings& settings) {
    if (t_fs < 0.0)
        return std::conj(displaced_bath_correlation(net, bath, i, j, mn, -t_fs, settings));
    const SpatialCorrelation sc(bath.correlation, net, bath.v_ph_nm_fs);
    const NodeData nd = make_node_data(bath, with_t_ref(settings, t_fs));
    double decay = 0.0, phase = 0.0;
    for (Index k = 0; k < nd.nodes; ++k) {
        decay += nd.w_jcoth[k] * sc.lambda(i, j, mn.m, mn.n, nd.omega[k]) *
                 std::cos(nd.x[k] * t_fs);
        phase += nd.w_j[k] * sc.lambda_prime(i, j, mn.m, mn.n, nd.omega[k]) *
                 std::sin(nd.x[k] * t_fs);
    }
    return std::exp(Complex(-decay, phase));
}

int KernelTables::pair_index(int m, int n) const {
    if (m > n) std::swap(m, n);
    if (m < 0 || n >= n_sites_ || m == n) return -1;
    return pair_lookup_[static_cast<std::size_t>(m) * n_sites_ + n];
}

int KernelTables::combo_index(int a, int b) const {
    if (a > b) std::swap(a, b);
    return b * (b + 1) / 2 + a;
}

int KernelTables::ij_index(int i, int j) const {
    if (i > j) std::swap(i, j);
    return j * (j + 1) / 2 + i;
}

double KernelTables::interp(const RealVector& y, double t) const {
    const double s = t / dt_;
    const Index n = y.size();
    Index i0 = static_cast<Index>(std::floor(s)) - 1;
    i0 = std::clamp<Index>(i0, 0, n - 4);
    const double u = s - static_cast<double>(i0);
    const double l0 = -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0;
    const double l1 = u * (u - 2.0) * (u - 3.0) / 2.0;
    const double l2 = -u * (u - 1.0) * (u - 3.0) / 2.0;
    const double l3 = u * (u - 1.0) * (u - 2.0) / 6.0;
    return l0 * y[i0] + l1 * y[i0 + 1] + l2 * y[i0 + 2] + l3 * y[i0 + 3];
}

Complex KernelTables::kernel_K(int a, int b, double t_fs) const {
    if (t_fs < 0.0) return std::conj(kernel_K(a, b, -t_fs));
    if (t_fs > t_max_ * (1.0 + 1e-12))
        throw DomainError("kernel table access beyond tabulated time range");
    if (constant_lambda_) {
        const auto& A = pairs_[a];
        const auto& B = pairs_[b];
        const double lam = spatial_.lambda(A.m, A.n, B.m, B.n, 0.0);
        if (lam == 0.0) return {0.0, 0.0};
        return lam * Complex(interp(phi_c_, t_fs), -interp(phi_s_, t_fs));
    }
    const int c = combo_index(a, b);
    return {interp(pp_kc_[c], t_fs), -interp(pp_ks_[c], t_fs)};
}

Complex KernelTables::displaced_f(int i, int j, int a, double t_fs) const {
    if (t_fs < 0.0) return std::conj(displaced_f(i, j, a, -t_fs));
    if (t_fs > t_max_ * (1.0 + 1e-12))
        throw DomainError("kernel table access beyond tabulated time range");
    if (constant_lambda_) {
        const auto& A = pairs_[a];
        const double lam = spatial_.lambda(i, j, A.m, A.n, 0.0);
        const double lamp = spatial_.lambda_prime(i, j, A.m, A.n, 0.0);
        if (lam == 0.0 && lamp == 0.0) return {1.0, 0.0};
        return std::exp(Complex(-lam * interp(phi_c_, t_fs), lamp * interp(phi_s_, t_fs)));
    }
    const double sign = (i > j) ? -1.0 : 1.0; // lambda_{ji} = -lambda_{ij}, lambda' symmetric
    const int idx = ij_index(i, j) * static_cast<int>(pairs_.size()) + a;
    return std::exp(
        Complex(-sign * interp(pp_fc_[idx], t_fs), interp(pp_fs_[idx], t_fs)));
}

Complex KernelTables::displaced_f_prime(int i, int j, int a, double t_fs) const {
    return 1.0 / displaced_f(i, j, a, t_fs);
}

double KernelTables::exponent_h(int a, int b) const {
    if (constant_lambda_) {
        const auto& A = pairs_[a];
        const auto& B = pairs_[b];
        const double laa = spatial_.lambda(A.m, A.n, A.m, A.n, 0.0);
        const double lbb = spatial_.lambda(B.m, B.n, B.m, B.n, 0.0);
        return 0.5 * (laa + lbb) * phi_c_[0];
    }
    return 0.5 * (pp_kc_[combo_index(a, a)][0] + pp_kc_[combo_index(b, b)][0]);
}

std::uint64_t kernel_param_hash(const SiteNetwork& net, const BathSpec& bath, double dt_fs,
                                double t_max_fs, const quad::Settings& settings) {
    std::ostringstream os;
    os.precision(17);
    os << "eps:";
    for (Index i = 0; i < net.epsilon_cm.size(); ++i) os << net.epsilon_cm[i] << ",";
    os << "V:";
    for (Index i = 0; i < net.coupling_cm.size(); ++i) os << net.coupling_cm.data()[i] << ",";
    if (net.distances_nm) {
        os << "d:";
        for (Index i = 0; i < net.distances_nm->size(); ++i)
            os << net.distances_nm->data()[i] << ",";
    }
    os << "kT:" << bath.kT_cm << ";corr:" << static_cast<int>(bath.correlation)
       << ";vph:" << bath.v_ph_nm_fs << ";s0:" << bath.sd.scale_continuum << ";terms:";
    for (const auto& term : bath.sd.continuum) os << term.weight << "/" << term.cutoff_cm << ",";
    if (bath.sd.mode)
        os << "mode:" << bath.sd.mode->weight << "/" << bath.sd.mode->omega_cm << "/"
           << bath.sd.mode->width_cm;
    os << ";dt:" << dt_fs << ";tmax:" << t_max_fs << ";npp:" << settings.nodes_per_panel
       << ";wmax:" << settings.omega_max << ";tref:" << settings.t_ref_fs;
    return fnv1a(os.str());
}

KernelTables build_kernel_tables(const SiteNetwork& net, const BathSpec& bath, double dt_fs,
                                 double t_max_fs, const quad::Settings& settings,
                                 bool verify_interpolation) {
    if (dt_fs <= 0.0) throw DomainError("kernel table needs a positive grid step");
    if (t_max_fs < dt_fs) throw DomainError("kernel table needs t_max >= dt");
    net.validate();
    bath.validate(net);

    KernelTables kt;
    kt.dt_ = dt_fs;
    kt.n_points_ = static_cast<Index>(std::llround(t_max_fs / dt_fs)) + 1;
    kt.t_max_ = dt_fs * static_cast<double>(kt.n_points_ - 1);
    kt.n_sites_ = net.n_sites();
    kt.kT_cm_ = bath.kT_cm;
    kt.pairs_ = net.coupled_pairs();
    kt.constant_lambda_ = bath.correlation != CorrelationKind::PropagatingModes;
    kt.spatial_ = SpatialCorrelation(bath.correlation, net, bath.v_ph_nm_fs);
    kt.param_hash_ = kernel_param_hash(net, bath, dt_fs, t_max_fs, settings);

    kt.pair_lookup_.assign(static_cast<std::size_t>(kt.n_sites_) * kt.n_sites_, -1);
    for (std::size_t a = 0; a < kt.pairs_.size(); ++a)
        kt.pair_lookup_[static_cast<std::size_t>(kt.pairs_[a].m) * kt.n_sites_ +
                        kt.pairs_[a].n] = static_cast<int>(a);

    quad::Settings table_settings = with_t_ref(settings, kt.t_max_);
    const NodeData nd = make_node_data(bath, table_settings);
    kt.diag_.quad_nodes = nd.nodes;
    kt.diag_.quad_panels = nd.panels;
    kt.diag_.omega_max = nd.omega_max;

    const Index npts = kt.n_points_;
    const int n = kt.n_sites_;
    const int npairs = static_cast<int>(kt.pairs_.size());

    // Chained rotations instead of per-point trig: cos/sin at t_{k+1} follow
    // from t_k by an elementwise complex rotation over the node vector. The
    // accumulated error is O(n_points * eps), far below the interpolation
    // check threshold.
    const RealVector rot_c = (nd.x.array() * kt.dt_).cos();
    const RealVector rot_s = (nd.x.array() * kt.dt_).sin();

    if (kt.constant_lambda_) {
        kt.phi_c_.resize(npts);
        kt.phi_s_.resize(npts);
        RealVector cos_buf = RealVector::Ones(nd.nodes);
        RealVector sin_buf = RealVector::Zero(nd.nodes);
        RealVector tmp(nd.nodes);
        for (Index k = 0; k < npts; ++k) {
            kt.phi_c_[k] = nd.w_jcoth.dot(cos_buf);
            kt.phi_s_[k] = nd.w_j.dot(sin_buf);
            tmp = cos_buf.cwiseProduct(rot_c) - sin_buf.cwiseProduct(rot_s);
            sin_buf = sin_buf.cwiseProduct(rot_c) + cos_buf.cwiseProduct(rot_s);
            cos_buf.swap(tmp);
        }
    } else {
        const int ncombo = npairs * (npairs + 1) / 2;
        const int nij = n * (n + 1) / 2;
        // lambda factors at the quadrature nodes, fixed per combination
        std::vector<RealVector> lam_cos(ncombo), lam_sin(ncombo);
        std::vector<RealVector> lam_fc(nij * npairs), lamp_fs(nij * npairs);
        for (int a = 0; a < npairs; ++a)
            for (int b = 0; b <= a; ++b) {
                RealVector lam(nd.nodes);
                for (Index k = 0; k < nd.nodes; ++k)
                    lam[k] = kt.spatial_.lambda(kt.pairs_[a].m, kt.pairs_[a].n, kt.pairs_[b].m,
                                                kt.pairs_[b].n, nd.omega[k]);
                lam_cos[kt.combo_index(b, a)] = (lam.array() * nd.w_jcoth.array()).matrix();
                lam_sin[kt.combo_index(b, a)] = (lam.array() * nd.w_j.array()).matrix();
            }
        for (int i = 0; i < n; ++i)
            for (int j = i; j < n; ++j)
                for (int a = 0; a < npairs; ++a) {
                    RealVector lam(nd.nodes), lamp(nd.nodes);
                    for (Index k = 0; k < nd.nodes; ++k) {
                        lam[k] = kt.spatial_.lambda(i, j, kt.pairs_[a].m, kt.pairs_[a].n,
                                                    nd.omega[k]);
                        lamp[k] = kt.spatial_.lambda_prime(i, j, kt.pairs_[a].m, kt.pairs_[a].n,
                                                           nd.omega[k]);
                    }
                    const int idx = kt.ij_index(i, j) * npairs + a;
                    lam_fc[idx] = (lam.array() * nd.w_jcoth.array()).matrix();
                    lamp_fs[idx] = (lamp.array() * nd.w_j.array()).matrix();
                }

        kt.pp_kc_.assign(ncombo, RealVector(npts));
        kt.pp_ks_.assign(ncombo, RealVector(npts));
        kt.pp_fc_.assign(nij * npairs, RealVector(npts));
        kt.pp_fs_.assign(nij * npairs, RealVector(npts));
        RealVector cos_buf = RealVector::Ones(nd.nodes);
        RealVector sin_buf = RealVector::Zero(nd.nodes);
        RealVector tmp(nd.nodes);
        for (Index k = 0; k < npts; ++k) {
            for (int c = 0; c < ncombo; ++c) {
                kt.pp_kc_[c][k] = lam_cos[c].dot(cos_buf);
                kt.pp_ks_[c][k] = lam_sin[c].dot(sin_buf);
            }
            for (int idx = 0; idx < nij * npairs; ++idx) {
                kt.pp_fc_[idx][k] = lam_fc[idx].dot(cos_buf);
                kt.pp_fs_[idx][k] = lamp_fs[idx].dot(sin_buf);
            }
            tmp = cos_buf.cwiseProduct(rot_c) - sin_buf.cwiseProduct(rot_s);
            sin_buf = sin_buf.cwiseProduct(rot_c) + cos_buf.cwiseProduct(rot_s);
            cos_buf.swap(tmp);
        }
    }

    // Renormalization factors for every site pair (needed by the initial-state
    // transform, not only for coupled pairs).
    kt.beta_ = RealMatrix::Ones(n, n);
    for (int m = 0; m < n; ++m)
        for (int k = m + 1; k < n; ++k) {
            double expo;
            if (kt.constant_lambda_) {
                expo = 0.5 * kt.spatial_.lambda(m, k, m, k, 0.0) * kt.phi_c_[0];
            } else {
                expo = 0.0;
                for (Index q = 0; q < nd.nodes; ++q)
                    expo += 0.5 * nd.w_jcoth[q] * kt.spatial_.lambda(m, k, m, k, nd.omega[q]);
            }
            double b;
            if (expo > divergence_exponent_cap) {
                kt.diag_.infrared_divergent = true;
                b = 0.0;
            } else {
                b = std::exp(-expo);
            }
            kt.beta_(m, k) = kt.beta_(k, m) = b;
        }

    if (verify_interpolation && npairs > 0 &&
        bath.correlation != CorrelationKind::FullyCorrelated) {
        // Deterministic off-grid samples against the direct-quadrature oracle.
        std::uint64_t state = kt.param_hash_ | 1ULL;
        const double k0 = std::abs(kt.kernel_K(0, 0, 0.0));
        double worst = 0.0;
        for (int trial = 0; trial < 6; ++trial) {
            state = state * 6364136223846793005ULL + 1442695040888963407ULL;
            const double frac = static_cast<double>(state >> 11) / 9007199254740992.0;
            const double t = (0.5 + frac * (static_cast<double>(kt.n_points_) - 2.0)) * kt.dt_;
            const Complex via_table = kt.kernel_K(0, 0, t);
            const Complex direct =
                phonon_correlation(net, bath, kt.pairs_[0], kt.pairs_[0], t, settings);
            const double scale = std::max(std::abs(direct), 1e-3 * k0);
            if (scale > 0.0)
                worst = std::max(worst, std::abs(via_table - direct) / scale);
        }
        kt.diag_.interp_check_rel_err = worst;
        if (worst > 1e-4) {
            std::ostringstream os;
            os << "kernel interpolation check failed: relative error " << worst
               << " (grid dt " << kt.dt_ << " fs, " << nd.nodes << " quadrature nodes)";
            throw NumericalError(os.str());
        }
    }
    return kt;
}

void KernelTables::save(const std::string& path) const {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open kernel cache file for writing: " + path);
    const char magic[8] = {'P', 'M', 'E', 'K', 'T', 'B', '1', '\0'};
    put(os, magic, sizeof(magic));
    put(os, &param_hash_, sizeof(param_hash_));
    put(os, &dt_, sizeof(dt_));
    put(os, &t_max_, sizeof(t_max_));
    put(os, &kT_cm_, sizeof(kT_cm_));
    const std::int64_t npts = n_points_;
    put(os, &npts, sizeof(npts));
    const std::int32_t nsites = n_sites_, constant = constant_lambda_ ? 1 : 0,
                       npairs = static_cast<std::int32_t>(pairs_.size());
    put(os, &nsites, sizeof(nsites));
    put(os, &constant, sizeof(constant));
    put(os, &npairs, sizeof(npairs));
    for (const auto& p : pairs_) {
        const std::int32_t m = p.m, n = p.n;
        put(os, &m, sizeof(m));
        put(os, &n, sizeof(n));
    }
    RealVector beta_flat = Eigen::Map<const RealVector>(beta_.data(), beta_.size());
    put_vec(os, beta_flat);
    if (constant_lambda_) {
        put_vec(os, phi_c_);
        put_vec(os, phi_s_);
    } else {
        auto put_all = [&](const std::vector<RealVector>& vs) {
            const std::uint64_t n = vs.size();
            put(os, &n, sizeof(n));
            for (const auto& v : vs) put_vec(os, v);
        };
        put_all(pp_kc_);
        put_all(pp_ks_);
        put_all(pp_fc_);
        put_all(pp_fs_);
    }
}

bool KernelTables::load(const std::string& path, const SiteNetwork& net, const BathSpec& bath,
                        double dt_fs, double t_max_fs, const quad::Settings& settings,
                        KernelTables& out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) return false;
    char magic[8];
    if (!get(is, magic, sizeof(magic)) || std::memcmp(magic, "PMEKTB1\0", 8) != 0) return false;
    const std::uint64_t expected = kernel_param_hash(net, bath, dt_fs, t_max_fs, settings);
    std::uint64_t hash = 0;
    if (!get(is, &hash, sizeof(hash)) || hash != expected) return false;
    out.param_hash_ = hash;
    out.spatial_ = SpatialCorrelation(bath.correlation, net, bath.v_ph_nm_fs);
    if (!get(is, &out.dt_, sizeof(out.dt_))) return false;
    if (!get(is, &out.t_max_, sizeof(out.t_max_))) return false;
    if (!get(is, &out.kT_cm_, sizeof(out.kT_cm_))) return false;
    std::int64_t npts = 0;
    if (!get(is, &npts, sizeof(npts))) return false;
    out.n_points_ = npts;
    std::int32_t nsites = 0, constant = 0, npairs = 0;
    if (!get(is, &nsites, sizeof(nsites))) return false;
    if (!get(is, &constant, sizeof(constant))) return false;
    if (!get(is, &npairs, sizeof(npairs))) return false;
    out.n_sites_ = nsites;
    out.constant_lambda_ = constant != 0;
    out.pairs_.clear();
    for (int a = 0; a < npairs; ++a) {
        std::int32_t m = 0, n = 0;
        if (!get(is, &m, sizeof(m))) return false;
        if (!get(is, &n, sizeof(n))) return false;
        out.pairs_.push_back({m, n});
    }
    out.pair_lookup_.assign(static_cast<std::size_t>(nsites) * nsites, -1);
    for (std::size_t a = 0; a < out.pairs_.size(); ++a)
        out.pair_lookup_[static_cast<std::size_t>(out.pairs_[a].m) * nsites +
                         out.pairs_[a].n] = static_cast<int>(a);
    RealVector beta_flat;
    if (!get_vec(is, beta_flat)) return false;
    out.beta_ = Eigen::Map<const RealMatrix>(beta_flat.data(), nsites, nsites);
    if (out.constant_lambda_) {
        if (!get_vec(is, out.phi_c_)) return false;
        if (!get_vec(is, out.phi_s_)) return false;
    } else {
        auto get_all = [&](std::vector<RealVector>& vs) {
            std::uint64_t n = 0;
            if (!get(is, &n, sizeof(n))) return false;
            vs.resize(n);
            for (auto& v : vs)
                if (!get_vec(is, v)) return false;
            return true;
        };
        if (!get_all(out.pp_kc_) || !get_all(out.pp_ks_) || !get_all(out.pp_fc_) ||
            !get_all(out.pp_fs_))
            return false;
    }
    return true;
}

} // namespace pme
