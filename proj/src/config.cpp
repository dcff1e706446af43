#include "pme/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "pme/errors.hpp"

namespace pme {

namespace {

struct Entry {
    std::string value;
    int line{0};
    bool used{false};
};

using Section = std::map<std::string, Entry>;
using Tree = std::map<std::string, Section>;

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

Tree parse_tree(const std::string& text, const std::string& origin) {
    Tree tree;
    std::istringstream is(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError(origin + ":" + std::to_string(lineno) +
                                  ": malformed section header");
            section = trim(line.substr(1, line.size() - 2));
            tree.try_emplace(section);
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        if (section.empty())
            throw ConfigError(origin + ":" + std::to_string(lineno) +
                              ": key outside of any section");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (!tree[section].try_emplace(key, Entry{value, lineno, false}).second)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" +
                              key + "'");
    }
    return tree;
}

class Reader {
public:
    Reader(Tree tree, std::string origin) : tree_(std::move(tree)), origin_(std::move(origin)) {}

    bool has(const std::string& sec, const std::string& key) {
        auto s = tree_.find(sec);
        return s != tree_.end() && s->second.count(key) > 0;
    }

    std::string get(const std::string& sec, const std::string& key) {
        auto& e = tree_.at(sec).at(key);
        e.used = true;
        return e.value;
    }

    double get_double(const std::string& sec, const std::string& key) {
        const std::string v = get(sec, key);
        try {
            std::size_t pos = 0;
            const double x = std::stod(v, &pos);
            if (pos != v.size()) throw std::invalid_argument(v);
            return x;
        } catch (const std::exception&) {
            throw ConfigError(where(sec, key) + ": expected a number, got '" + v + "'");
        }
    }

    bool get_bool(const std::string& sec, const std::string& key) {
        const std::string v = get(sec, key);
        if (v == "true" || v == "yes" || v == "1") return true;
        if (v == "false" || v == "no" || v == "0") return false;
        throw ConfigError(where(sec, key) + ": expected true/false, got '" + v + "'");
    }

    std::vector<double> get_list(const std::string& sec, const std::string& key) {
        const std::string v = get(sec, key);
        std::istringstream is(v);
        std::vector<double> out;
        std::string tok;
        while (is >> tok) {
            try {
                std::size_t pos = 0;
                out.push_back(std::stod(tok, &pos));
                if (pos != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError(where(sec, key) + ": expected a number list, got '" + tok +
                                  "'");
            }
        }
        return out;
    }

    std::string where(const std::string& sec, const std::string& key) {
        int line = 0;
        auto s = tree_.find(sec);
        if (s != tree_.end()) {
            auto k = s->second.find(key);
            if (k != s->second.end()) line = k->second.line;
        }
        return origin_ + ":" + std::to_string(line) + ": [" + sec + "] " + key;
    }

    bool has_section(const std::string& sec) const { return tree_.count(sec) > 0; }

    void reject_unknown(const std::map<std::string, std::set<std::string>>& schema) const {
        for (const auto& [sec, entries] : tree_) {
            auto it = schema.find(sec);
            if (it == schema.end())
                throw ConfigError(origin_ + ": unknown section [" + sec + "]");
            for (const auto& [key, e] : entries)
                if (it->second.count(key) == 0)
                    throw ConfigError(origin_ + ":" + std::to_string(e.line) +
                                      ": unknown key '" + key + "' in [" + sec + "]");
        }
    }

private:
    Tree tree_;
    std::string origin_;
};

const std::map<std::string, std::set<std::string>> kSchema{
    {"model", {"preset", "epsilon_cm", "coupling_cm", "distances_nm"}},
    {"bath",
     {"kT_cm", "correlation", "v_ph_nm_fs", "s0", "continuum_s", "continuum_omega_cm", "mode_s",
      "mode_omega_cm", "mode_width_cm"}},
    {"initial", {"site", "amplitudes", "matrix_re", "matrix_im"}},
    {"initial2", {"site", "amplitudes", "matrix_re", "matrix_im"}},
    {"numerics",
     {"dt_fs", "t_max_fs", "xi_phase", "include_inhomogeneous", "force_beta_zero",
      "secular_tol_cm", "markov_rel_decay", "quad_nodes_per_panel", "quad_omega_max_cm",
      "table_dt_fs", "table_t_max_fs"}},
    {"run", {"propagator", "out_dir"}},
};

ComplexMatrix initial_from_section(Reader& r, const std::string& sec, int n,
                                   std::vector<std::string>& warnings) {
    const bool has_site = r.has(sec, "site");
    const bool has_amp = r.has(sec, "amplitudes");
    const bool has_mat = r.has(sec, "matrix_re");
    if (static_cast<int>(has_site) + static_cast<int>(has_amp) + static_cast<int>(has_mat) != 1)
        throw ConfigError("[" + sec + "] needs exactly one of site, amplitudes, matrix_re");

    if (has_site) {
        const double sd = r.get_double(sec, "site");
        const int site = static_cast<int>(sd);
        if (sd != site || site < 1 || site > n)
            throw ConfigError(r.where(sec, "site") + ": site index must be in 1.." +
                              std::to_string(n));
        ComplexMatrix rho = ComplexMatrix::Zero(n, n);
        rho(site - 1, site - 1) = 1.0;
        return rho;
    }
    if (has_amp) {
        const auto amps = r.get_list(sec, "amplitudes");
        if (static_cast<int>(amps.size()) != n)
            throw ConfigError(r.where(sec, "amplitudes") + ": expected " + std::to_string(n) +
                              " amplitudes");
        double norm2 = 0.0;
        for (double a : amps) norm2 += a * a;
        if (std::abs(norm2 - 1.0) > 1e-6)
            throw ConfigError(r.where(sec, "amplitudes") + ": amplitudes not normalized (|a|^2 = " +
                              std::to_string(norm2) + ")");
        if (norm2 != 1.0)
            warnings.push_back("[" + sec + "] amplitudes renormalized by " +
                               std::to_string(std::sqrt(norm2)));
        ComplexVector psi(n);
        for (int i = 0; i < n; ++i) psi[i] = amps[static_cast<std::size_t>(i)];
        psi /= std::sqrt(norm2);
        return psi * psi.adjoint();
    }
    const auto re = r.get_list(sec, "matrix_re");
    std::vector<double> im(static_cast<std::size_t>(n) * n, 0.0);
    if (r.has(sec, "matrix_im")) {
        const auto imv = r.get_list(sec, "matrix_im");
        if (imv.size() != im.size())
            throw ConfigError(r.where(sec, "matrix_im") + ": expected " +
                              std::to_string(n * n) + " entries");
        im = imv;
    }
    if (static_cast<int>(re.size()) != n * n)
        throw ConfigError(r.where(sec, "matrix_re") + ": expected " + std::to_string(n * n) +
                          " entries");
    ComplexMatrix rho(n, n);
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            rho(a, b) = Complex(re[static_cast<std::size_t>(a) * n + b],
                                im[static_cast<std::size_t>(a) * n + b]);
    return rho;
}

} // namespace

RunConfig parse_run_config(const std::string& text, const std::string& origin) {
    Reader r(parse_tree(text, origin), origin);
    r.reject_unknown(kSchema);

    RunConfig config;

    // model (+ bath defaults from the preset)
    bool have_model = false;
    if (r.has("model", "preset")) {
        const std::string preset = r.get("model", "preset");
        if (preset == "fmo4")
            std::tie(config.net, config.bath) = fmo4_preset();
        else if (preset == "fmo4_fast_bath")
            std::tie(config.net, config.bath) = fmo4_fast_bath_preset();
        else
            throw ConfigError(r.where("model", "preset") + ": unknown preset '" + preset + "'");
        have_model = true;
    }
    if (r.has("model", "epsilon_cm")) {
        if (have_model)
            throw ConfigError("[model] preset and explicit epsilon_cm are mutually exclusive");
        const auto eps = r.get_list("model", "epsilon_cm");
        const int n = static_cast<int>(eps.size());
        const auto v = r.get_list("model", "coupling_cm");
        if (static_cast<int>(v.size()) != n * n)
            throw ConfigError(r.where("model", "coupling_cm") + ": expected " +
                              std::to_string(n * n) + " row-major entries");
        config.net.epsilon_cm = Eigen::Map<const RealVector>(eps.data(), n);
        config.net.coupling_cm.resize(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                config.net.coupling_cm(a, b) = v[static_cast<std::size_t>(a) * n + b];
        have_model = true;
    }
    if (!have_model) throw ConfigError("[model] needs a preset or explicit epsilon_cm");
    if (r.has("model", "distances_nm")) {
        const int n = config.net.n_sites();
        const auto d = r.get_list("model", "distances_nm");
        if (static_cast<int>(d.size()) != n * n)
            throw ConfigError(r.where("model", "distances_nm") + ": expected " +
                              std::to_string(n * n) + " row-major entries");
        RealMatrix dist(n, n);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) dist(a, b) = d[static_cast<std::size_t>(a) * n + b];
        config.net.distances_nm = dist;
    }

    // bath overrides
    if (r.has("bath", "kT_cm")) config.bath.kT_cm = r.get_double("bath", "kT_cm");
    if (r.has("bath", "correlation")) {
        const std::string c = r.get("bath", "correlation");
        if (c == "independent")
            config.bath.correlation = CorrelationKind::Independent;
        else if (c == "fully_correlated")
            config.bath.correlation = CorrelationKind::FullyCorrelated;
        else if (c == "propagating")
            config.bath.correlation = CorrelationKind::PropagatingModes;
        else
            throw ConfigError(r.where("bath", "correlation") +
                              ": expected independent | fully_correlated | propagating");
    }
    if (r.has("bath", "v_ph_nm_fs")) config.bath.v_ph_nm_fs = r.get_double("bath", "v_ph_nm_fs");
    if (r.has("bath", "s0")) config.bath.sd.scale_continuum = r.get_double("bath", "s0");
    if (r.has("bath", "continuum_s") || r.has("bath", "continuum_omega_cm")) {
        const auto s = r.get_list("bath", "continuum_s");
        const auto w = r.get_list("bath", "continuum_omega_cm");
        if (s.size() != w.size())
            throw ConfigError("[bath] continuum_s and continuum_omega_cm must match in length");
        config.bath.sd.continuum.clear();
        for (std::size_t i = 0; i < s.size(); ++i)
            config.bath.sd.continuum.push_back({s[i], w[i]});
    }
    if (r.has("bath", "mode_s")) {
        const double sh = r.get_double("bath", "mode_s");
        if (sh == 0.0) {
            config.bath.sd.mode.reset();
        } else {
            LocalizedMode mode = config.bath.sd.mode.value_or(LocalizedMode{});
            mode.weight = sh;
            config.bath.sd.mode = mode;
        }
    }
    if (r.has("bath", "mode_omega_cm")) {
        LocalizedMode mode = config.bath.sd.mode.value_or(LocalizedMode{});
        mode.omega_cm = r.get_double("bath", "mode_omega_cm");
        config.bath.sd.mode = mode;
    }
    if (r.has("bath", "mode_width_cm")) {
        LocalizedMode mode = config.bath.sd.mode.value_or(LocalizedMode{});
        mode.width_cm = r.get_double("bath", "mode_width_cm");
        config.bath.sd.mode = mode;
    }

    config.net.validate();
    config.bath.validate(config.net);

    if (!r.has_section("initial")) throw ConfigError("missing [initial] section");
    config.rho0 = initial_from_section(r, "initial", config.net.n_sites(), config.warnings);
    if (r.has_section("initial2"))
        config.rho0_b = initial_from_section(r, "initial2", config.net.n_sites(),
                                             config.warnings);

    if (r.has("numerics", "dt_fs")) config.prop.dt_fs = r.get_double("numerics", "dt_fs");
    if (r.has("numerics", "t_max_fs")) config.prop.t_max_fs = r.get_double("numerics", "t_max_fs");
    if (config.prop.dt_fs <= 0.0 || config.prop.t_max_fs < config.prop.dt_fs)
        throw ConfigError("[numerics] needs dt_fs > 0 and t_max_fs >= dt_fs");
    if (r.has("numerics", "xi_phase")) {
        const std::string p = r.get("numerics", "xi_phase");
        if (p == "s")
            config.prop.xi_phase = XiPhase::S;
        else if (p == "t")
            config.prop.xi_phase = XiPhase::T;
        else
            throw ConfigError(r.where("numerics", "xi_phase") + ": expected s or t");
    }
    if (r.has("numerics", "include_inhomogeneous"))
        config.prop.include_inhomogeneous = r.get_bool("numerics", "include_inhomogeneous");
    if (r.has("numerics", "force_beta_zero"))
        config.prop.force_beta_zero = r.get_bool("numerics", "force_beta_zero");
    if (r.has("numerics", "secular_tol_cm"))
        config.prop.secular_tol_cm = r.get_double("numerics", "secular_tol_cm");
    if (r.has("numerics", "markov_rel_decay"))
        config.prop.markov_rel_decay = r.get_double("numerics", "markov_rel_decay");
    if (r.has("numerics", "quad_nodes_per_panel"))
        config.prop.quad.nodes_per_panel =
            static_cast<int>(r.get_double("numerics", "quad_nodes_per_panel"));
    if (r.has("numerics", "quad_omega_max_cm"))
        config.prop.quad.omega_max = r.get_double("numerics", "quad_omega_max_cm");
    if (r.has("numerics", "table_dt_fs"))
        config.prop.table_dt_fs = r.get_double("numerics", "table_dt_fs");
    if (r.has("numerics", "table_t_max_fs"))
        config.prop.table_t_max_fs = r.get_double("numerics", "table_t_max_fs");

    if (r.has("run", "propagator"))
        config.prop.tag = propagator_from_name(r.get("run", "propagator"));
    if (r.has("run", "out_dir")) config.out_dir = r.get("run", "out_dir");

    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    std::stringstream buffer;
    buffer << is.rdbuf();
    return parse_run_config(buffer.str(), path);
}

namespace {

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

std::string fmt_list(const double* data, Index count) {
    std::string out;
    for (Index i = 0; i < count; ++i) {
        if (i) out += " ";
        out += fmt(data[i]);
    }
    return out;
}

std::string fmt_matrix_rowmajor(const RealMatrix& m) {
    std::string out;
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) {
            if (r || c) out += " ";
            out += fmt(m(r, c));
        }
    return out;
}

} // namespace

std::string resolved_config_text(const RunConfig& config,
                                 const std::vector<std::string>& comments) {
    std::ostringstream os;
    for (const auto& c : comments) os << "# " << c << "\n";
    os << "[model]\n";
    os << "epsilon_cm = " << fmt_list(config.net.epsilon_cm.data(), config.net.epsilon_cm.size())
       << "\n";
    os << "coupling_cm = " << fmt_matrix_rowmajor(config.net.coupling_cm) << "\n";
    if (config.net.distances_nm)
        os << "distances_nm = " << fmt_matrix_rowmajor(*config.net.distances_nm) << "\n";

    os << "\n[bath]\n";
    os << "kT_cm = " << fmt(config.bath.kT_cm) << "\n";
    switch (config.bath.correlation) {
    case CorrelationKind::Independent: os << "correlation = independent\n"; break;
    case CorrelationKind::FullyCorrelated: os << "correlation = fully_correlated\n"; break;
    case CorrelationKind::PropagatingModes:
        os << "correlation = propagating\n";
        os << "v_ph_nm_fs = " << fmt(config.bath.v_ph_nm_fs) << "\n";
        break;
    }
    os << "s0 = " << fmt(config.bath.sd.scale_continuum) << "\n";
    std::string s_list, w_list;
    for (const auto& term : config.bath.sd.continuum) {
        if (!s_list.empty()) {
            s_list += " ";
            w_list += " ";
        }
        s_list += fmt(term.weight);
        w_list += fmt(term.cutoff_cm);
    }
    os << "continuum_s = " << s_list << "\n";
    os << "continuum_omega_cm = " << w_list << "\n";
    if (config.bath.sd.mode) {
        os << "mode_s = " << fmt(config.bath.sd.mode->weight) << "\n";
        os << "mode_omega_cm = " << fmt(config.bath.sd.mode->omega_cm) << "\n";
        os << "mode_width_cm = " << fmt(config.bath.sd.mode->width_cm) << "\n";
    } else {
        os << "mode_s = 0\n";
    }

    const auto emit_initial = [&os](const char* sec, const ComplexMatrix& rho) {
        os << "\n[" << sec << "]\n";
        std::string re, im;
        for (Index r = 0; r < rho.rows(); ++r)
            for (Index c = 0; c < rho.cols(); ++c) {
                if (r || c) {
                    re += " ";
                    im += " ";
                }
                re += fmt(rho(r, c).real());
                im += fmt(rho(r, c).imag());
            }
        os << "matrix_re = " << re << "\n";
        os << "matrix_im = " << im << "\n";
    };
    emit_initial("initial", config.rho0);
    if (config.rho0_b) emit_initial("initial2", *config.rho0_b);

    os << "\n[numerics]\n";
    os << "dt_fs = " << fmt(config.prop.dt_fs) << "\n";
    os << "t_max_fs = " << fmt(config.prop.t_max_fs) << "\n";
    os << "xi_phase = " << (config.prop.xi_phase == XiPhase::S ? "s" : "t") << "\n";
    os << "include_inhomogeneous = " << (config.prop.include_inhomogeneous ? "true" : "false")
       << "\n";
    os << "force_beta_zero = " << (config.prop.force_beta_zero ? "true" : "false") << "\n";
    os << "secular_tol_cm = " << fmt(config.prop.secular_tol_cm) << "\n";
    os << "markov_rel_decay = " << fmt(config.prop.markov_rel_decay) << "\n";
    os << "quad_nodes_per_panel = " << config.prop.quad.nodes_per_panel << "\n";
    os << "quad_omega_max_cm = " << fmt(config.prop.quad.omega_max) << "\n";
    os << "table_dt_fs = " << fmt(config.prop.table_dt_fs) << "\n";
    os << "table_t_max_fs = " << fmt(config.prop.table_t_max_fs) << "\n";

    os << "\n[run]\n";
    os << "propagator = " << propagator_name(config.prop.tag) << "\n";
    os << "out_dir = " << config.out_dir << "\n";
    return os.str();
}

} // namespace pme
