// pme_main.cpp — Command-line front end: simulate, compare, spectrum, tracedist, validate

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pme/config.hpp"
#include "pme/csv.hpp"
#include "pme/dynamics.hpp"
#include "pme/errors.hpp"
#include "pme/observables.hpp"
#include "pme/parallel.hpp"
#include "pme/superop.hpp"
#include "pme/units.hpp"

namespace fs = std::filesystem;
using namespace pme;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir;
    std::string cache_dir;
    int threads{1};
};

std::string effective_cache_dir(const GlobalOptions& opts) {
    if (!opts.cache_dir.empty()) return opts.cache_dir;
    if (const char* env = std::getenv("PME_CACHE_DIR")) return env;
    return {};
}

KernelTables kernels_for(const RunConfig& config, const GlobalOptions& opts,
                         double table_dt, double table_t_max, std::string* cache_note) {
    const std::string cache = effective_cache_dir(opts);
    const std::uint64_t hash = kernel_param_hash(config.net, config.bath, table_dt, table_t_max,
                                                 config.prop.quad);
    if (!cache.empty()) {
        fs::create_directories(cache);
        std::ostringstream name;
        name << cache << "/kernels_" << std::hex << hash << ".bin";
        KernelTables loaded;
        if (KernelTables::load(name.str(), config.net, config.bath, table_dt, table_t_max,
                               config.prop.quad, loaded)) {
            if (cache_note) *cache_note = "kernel cache hit: " + name.str();
            return loaded;
        }
        KernelTables built = build_kernel_tables(config.net, config.bath, table_dt, table_t_max,
                                                 config.prop.quad);
        built.save(name.str());
        if (cache_note) *cache_note = "kernel cache miss, wrote " + name.str();
        return built;
    }
    if (cache_note) *cache_note = "kernel cache disabled";
    return build_kernel_tables(config.net, config.bath, table_dt, table_t_max, config.prop.quad);
}

RunConfig load_config(const GlobalOptions& opts) {
    if (opts.config_path.empty()) throw ConfigError("--config is required");
    RunConfig config = load_run_config(opts.config_path);
    if (!opts.out_dir.empty()) config.out_dir = opts.out_dir;
    for (const auto& w : config.warnings) std::cerr << "warning: " << w << "\n";
    return config;
}

void write_metadata(const fs::path& dir, const RunConfig& config, std::uint64_t kernel_hash,
                    const std::string& cache_note) {
    std::ostringstream hash_hex;
    hash_hex << std::hex << kernel_hash;
    std::ofstream meta(dir / "run.meta");
    meta << resolved_config_text(config, {"resolved run parameters; this file is itself a "
                                          "valid config reproducing the run",
                                          "kernel_hash = " + hash_hex.str(), cache_note});
}

int cmd_simulate(const GlobalOptions& opts) {
    RunConfig config = load_config(opts);
    const auto [table_dt, table_t_max] = kernel_grid_for(config.prop);
    std::string cache_note;
    const KernelTables kernels =
        kernels_for(config, opts, table_dt, table_t_max, &cache_note);
    const Trajectory traj = propagate(config.net, config.bath, kernels, config.rho0, config.prop);

    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    write_trajectory_csv((dir / "trajectory.csv").string(), traj);
    write_populations_csv((dir / "populations.csv").string(), traj);
    write_coherences_csv((dir / "coherences.csv").string(), traj);
    write_frame_csv((dir / "frame.csv").string(), traj.frame);
    write_metadata(dir, config, kernels.param_hash(), cache_note);
    std::cout << "wrote " << (dir / "populations.csv").string() << " ("
              << propagator_name(config.prop.tag) << ", " << traj.n_steps() << " samples)\n";
    return 0;
}

int cmd_compare(const GlobalOptions& opts, const std::vector<std::string>& tags) {
    if (tags.size() < 2) throw ConfigError("compare needs at least two propagator tags");
    RunConfig config = load_config(opts);

    double table_dt = 0.0, table_t_max = 0.0;
    std::vector<Propagator> props;
    for (const auto& t : tags) {
        PropagatorConfig pc = config.prop;
        pc.tag = propagator_from_name(t);
        props.push_back(pc.tag);
        const auto [dt_k, tmax_k] = kernel_grid_for(pc);
        table_dt = table_dt == 0.0 ? dt_k : std::min(table_dt, dt_k);
        table_t_max = std::max(table_t_max, tmax_k);
    }
    std::string cache_note;
    const KernelTables kernels =
        kernels_for(config, opts, table_dt, table_t_max, &cache_note);

    std::vector<Trajectory> trajs;
    for (const auto p : props) {
        PropagatorConfig pc = config.prop;
        pc.tag = p;
        trajs.push_back(propagate(config.net, config.bath, kernels, config.rho0, pc));
    }

    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    std::vector<std::pair<std::string, const Trajectory*>> runs;
    for (std::size_t i = 0; i < tags.size(); ++i) runs.emplace_back(tags[i], &trajs[i]);
    write_compare_csv((dir / "compare_populations.csv").string(), runs);

    std::ofstream summary(dir / "compare_summary.txt");
    for (std::size_t i = 0; i < trajs.size(); ++i)
        for (std::size_t j = i + 1; j < trajs.size(); ++j) {
            const RealMatrix pi = site_populations(trajs[i]);
            const RealMatrix pj = site_populations(trajs[j]);
            double dev = 0.0, dev_late = 0.0;
            for (Index k = 0; k < pi.rows(); ++k) {
                const double d = (pi.row(k) - pj.row(k)).cwiseAbs().maxCoeff();
                dev = std::max(dev, d);
                if (trajs[i].times[k] > 700.0) dev_late = std::max(dev_late, d);
            }
            summary << tags[i] << " vs " << tags[j] << ": max|dp| = " << csv_number(dev)
                    << ", max|dp| beyond 700 fs = " << csv_number(dev_late) << "\n";
        }
    write_metadata(dir, config, kernels.param_hash(), cache_note);
    std::cout << "wrote " << (dir / "compare_populations.csv").string() << "\n";
    return 0;
}

int cmd_spectrum(const GlobalOptions& opts, int site, int pad_factor) {
    RunConfig config = load_config(opts);
    if (site < 1 || site > config.net.n_sites())
        throw ConfigError("spectrum site index out of range");
    const auto [table_dt, table_t_max] = kernel_grid_for(config.prop);
    std::string cache_note;
    const KernelTables kernels =
        kernels_for(config, opts, table_dt, table_t_max, &cache_note);
    const Trajectory traj = propagate(config.net, config.bath, kernels, config.rho0, config.prop);
    const RealMatrix pops = site_populations(traj);

    SpectrumConfig sc;
    sc.pad_factor = pad_factor;
    const Spectrum spec = population_spectrum(pops.col(site - 1), config.prop.dt_fs, sc);

    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    write_populations_csv((dir / "populations.csv").string(), traj);
    write_spectrum_csv((dir / "spectrum.csv").string(), spec);
    write_spectrum_peaks_csv((dir / "spectrum_peaks.csv").string(), spec);
    write_metadata(dir, config, kernels.param_hash(), cache_note);
    if (!spec.peaks.empty())
        std::cout << "dominant peak at " << csv_number(spec.peaks.front().nu_cm)
                  << " 1/cm (fwhm " << csv_number(spec.peaks.front().fwhm_cm) << ")\n";
    else
        std::cout << "no peaks above threshold\n";
    return 0;
}

int cmd_tracedist(const GlobalOptions& opts) {
    RunConfig config = load_config(opts);
    if (!config.rho0_b)
        throw ConfigError("tracedist needs a second initial state ([initial2] section)");
    const auto [table_dt, table_t_max] = kernel_grid_for(config.prop);
    std::string cache_note;
    const KernelTables kernels =
        kernels_for(config, opts, table_dt, table_t_max, &cache_note);
    const Trajectory ta = propagate(config.net, config.bath, kernels, config.rho0, config.prop);
    const Trajectory tb =
        propagate(config.net, config.bath, kernels, *config.rho0_b, config.prop);

    fs::create_directories(config.out_dir);
    const fs::path dir(config.out_dir);
    std::ofstream intervals(dir / "tracedist_intervals.txt");
    for (const auto frame_tag : {FrameTag::Polaron, FrameTag::Lab}) {
        const auto report = trace_distance_analysis(ta, tb, frame_tag);
        const std::string name = frame_tag == FrameTag::Polaron ? "polaron" : "lab";
        write_tracedist_csv((dir / ("tracedist_" + name + ".csv")).string(), report);
        intervals << name << ": " << report.positive_intervals.size()
                  << " positive-derivative intervals\n";
        for (const auto& [lo, hi] : report.positive_intervals)
            intervals << name << "," << csv_number(lo) << "," << csv_number(hi) << "\n";
    }
    write_metadata(dir, config, kernels.param_hash(), cache_note);
    std::cout << "wrote " << (dir / "tracedist_polaron.csv").string() << " and lab frame\n";
    return 0;
}

int cmd_validate(bool quick) {
    int failures = 0;
    const auto report = [&](const std::string& name, bool ok, const std::string& detail = "") {
        std::cout << (ok ? "PASS" : "FAIL") << "  " << name;
        if (!detail.empty()) std::cout << "  (" << detail << ")";
        std::cout << "\n";
        if (!ok) ++failures;
    };

    auto [net, bath] = fmo4_preset();
    const KernelTables kernels = build_kernel_tables(net, bath, 0.5, 200.0);

    // beta consistent with K(0)
    {
        const double beta = kernels.beta(0, 1);
        const double k0 = kernels.kernel_K(0, 0, 0.0).real();
        report("beta equals exp(-K(0)/2)", std::abs(beta - std::exp(-0.5 * k0)) < 1e-10);
    }
    // quadrature node doubling
    {
        quad::Settings doubled;
        doubled.nodes_per_panel = 32;
        const double b1 = renormalization_factor(net, bath, 0, 1);
        const double b2 = renormalization_factor(net, bath, 0, 1, doubled);
        report("node doubling stable to 1e-6", std::abs(b1 - b2) / b1 < 1e-6);
    }
    // fully correlated baths decouple
    {
        BathSpec fc = bath;
        fc.correlation = CorrelationKind::FullyCorrelated;
        const KernelTables kt = build_kernel_tables(net, fc, 0.5, 50.0);
        report("fully correlated kernels vanish",
               std::abs(kt.kernel_K(0, 1, 25.0)) == 0.0 && kt.beta(0, 1) == 1.0);
    }
    if (!quick) {
        // short full propagation keeps trace and hermiticity
        PropagatorConfig pc;
        pc.dt_fs = 1.0;
        pc.t_max_fs = 50.0;
        ComplexMatrix rho0 = ComplexMatrix::Zero(4, 4);
        rho0(0, 0) = 1.0;
        const Trajectory traj = propagate(net, bath, rho0, pc);
        double worst_trace = 0.0, worst_herm = 0.0;
        for (Index k = 0; k < traj.n_steps(); ++k) {
            worst_trace = std::max(worst_trace,
                                   std::abs(traj.rho_eigen(k).trace() - Complex(1.0, 0.0)));
            worst_herm = std::max(
                worst_herm,
                (traj.rho_eigen(k) - traj.rho_eigen(k).adjoint()).cwiseAbs().maxCoeff());
        }
        report("trace preserved over short run", worst_trace < 1e-8,
               "drift " + csv_number(worst_trace));
        report("hermiticity preserved over short run", worst_herm < 1e-8,
               "defect " + csv_number(worst_herm));
    }
    std::cout << (failures == 0 ? "all checks passed\n" : "checks FAILED\n");
    return failures == 0 ? 0 : 3;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Polaron-frame master-equation simulator for excitation transfer"};
    app.require_subcommand(1);

    GlobalOptions opts;
    app.add_option("--threads", opts.threads, "worker threads (0 = hardware)");

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        if (needs_config) sub->add_option("--config", opts.config_path, "config file path");
        sub->add_option("--out", opts.out_dir, "output directory (overrides config)");
        sub->add_option("--cache", opts.cache_dir, "kernel cache directory");
    };

    auto* simulate = app.add_subcommand("simulate", "propagate and write CSV series");
    add_common(simulate);

    auto* compare = app.add_subcommand("compare", "run several propagators side by side");
    add_common(compare);
    std::vector<std::string> tags;
    compare->add_option("--tags", tags, "propagator tags")->delimiter(',');

    auto* spectrum = app.add_subcommand("spectrum", "population spectrum of one site");
    add_common(spectrum);
    int site = 1, pad = 4;
    spectrum->add_option("--site", site, "site index (1-based)");
    spectrum->add_option("--pad", pad, "zero-padding factor");

    auto* tracedist = app.add_subcommand("tracedist", "trace-distance analysis of two runs");
    add_common(tracedist);

    auto* validate = app.add_subcommand("validate", "run built-in numerical checks");
    bool quick = false;
    validate->add_flag("--quick", quick, "skip the propagation checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    set_thread_count(opts.threads);
    try {
        if (simulate->parsed()) return cmd_simulate(opts);
        if (compare->parsed()) return cmd_compare(opts, tags);
        if (spectrum->parsed()) return cmd_spectrum(opts, site, pad);
        if (tracedist->parsed()) return cmd_tracedist(opts);
        if (validate->parsed()) return cmd_validate(quick);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const DomainError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
