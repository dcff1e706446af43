#include "pme/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "pme/errors.hpp"

namespace pme {

std::string csv_number(double x) {
    if (!std::isfinite(x)) throw NumericalError("non-finite value reached a CSV writer");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

namespace {

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot open output file: " + path);
    return os;
}

} // namespace

void write_trajectory_csv(const std::string& path, const Trajectory& traj) {
    auto os = open_out(path);
    const int n = traj.frame.n_sites();
    os << "t_fs";
    for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
            os << ",re_rho_" << a + 1 << b + 1 << ",im_rho_" << a + 1 << b + 1;
    os << "\n";
    for (Index k = 0; k < traj.n_steps(); ++k) {
        os << csv_number(traj.times[k]);
        const auto& rho = traj.rho_eigen(k);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                os << "," << csv_number(rho(a, b).real()) << ","
                   << csv_number(rho(a, b).imag());
        os << "\n";
    }
}

void write_populations_csv(const std::string& path, const Trajectory& traj) {
    auto os = open_out(path);
    const RealMatrix pops = site_populations(traj);
    os << "t_fs";
    for (Index m = 0; m < pops.cols(); ++m) os << ",p" << m + 1;
    os << "\n";
    for (Index k = 0; k < traj.n_steps(); ++k) {
        os << csv_number(traj.times[k]);
        for (Index m = 0; m < pops.cols(); ++m) os << "," << csv_number(pops(k, m));
        os << "\n";
    }
}

void write_coherences_csv(const std::string& path, const Trajectory& traj) {
    auto os = open_out(path);
    const int n = traj.frame.n_sites();
    os << "# lab-frame coherences, zeroth-order reconstruction of the displaced part\n";
    os << "t_fs";
    for (int m = 0; m < n; ++m)
        for (int k = m + 1; k < n; ++k)
            os << ",re_c_" << m + 1 << k + 1 << ",im_c_" << m + 1 << k + 1;
    os << "\n";
    for (Index t = 0; t < traj.n_steps(); ++t) {
        os << csv_number(traj.times[t]);
        const ComplexMatrix lab = lab_density(traj, t);
        for (int m = 0; m < n; ++m)
            for (int k = m + 1; k < n; ++k)
                os << "," << csv_number(lab(k, m).real()) << ","
                   << csv_number(lab(k, m).imag());
        os << "\n";
    }
}

void write_compare_csv(const std::string& path,
                       const std::vector<std::pair<std::string, const Trajectory*>>& runs) {
    auto os = open_out(path);
    os << "t_fs";
    std::vector<RealMatrix> pops;
    for (const auto& [tag, traj] : runs) {
        pops.push_back(site_populations(*traj));
        for (Index m = 0; m < pops.back().cols(); ++m) os << ",p" << m + 1 << "_" << tag;
    }
    os << "\n";
    const Trajectory& first = *runs.front().second;
    for (Index k = 0; k < first.n_steps(); ++k) {
        os << csv_number(first.times[k]);
        for (const auto& p : pops)
            for (Index m = 0; m < p.cols(); ++m) os << "," << csv_number(p(k, m));
        os << "\n";
    }
}

void write_spectrum_csv(const std::string& path, const Spectrum& spec) {
    auto os = open_out(path);
    os << "nu_cm,magnitude\n";
    for (Index k = 0; k < spec.nu_cm.size(); ++k)
        os << csv_number(spec.nu_cm[k]) << "," << csv_number(spec.magnitude[k]) << "\n";
}

void write_spectrum_peaks_csv(const std::string& path, const Spectrum& spec) {
    auto os = open_out(path);
    os << "nu_cm,height,fwhm_cm\n";
    for (const auto& peak : spec.peaks)
        os << csv_number(peak.nu_cm) << "," << csv_number(peak.height) << ","
           << csv_number(peak.fwhm_cm) << "\n";
}

void write_tracedist_csv(const std::string& path, const NonMarkovReport& report) {
    auto os = open_out(path);
    os << "t_fs,D,dD_dt\n";
    for (Index k = 0; k < report.times.size(); ++k)
        os << csv_number(report.times[k]) << "," << csv_number(report.distance[k]) << ","
           << csv_number(report.derivative[k]) << "\n";
}

void write_frame_csv(const std::string& path, const PolaronFrame& frame) {
    auto os = open_out(path);
    const int n = frame.n_sites();
    os << "quantity,i,j,value\n";
    for (int a = 0; a < n; ++a)
        os << "eigenvalue_cm," << a + 1 << ",0," << csv_number(frame.eigenvalues[a]) << "\n";
    for (int m = 0; m < n; ++m)
        os << "epsilon_tilde_cm," << m + 1 << ",0," << csv_number(frame.epsilon_tilde[m])
           << "\n";
    for (int m = 0; m < n; ++m)
        for (int a = 0; a < n; ++a)
            os << "u," << m + 1 << "," << a + 1 << "," << csv_number(frame.u(m, a)) << "\n";
    for (int m = 0; m < n; ++m)
        for (int k = 0; k < n; ++k) {
            if (m == k) continue;
            os << "beta," << m + 1 << "," << k + 1 << "," << csv_number(frame.beta(m, k))
               << "\n";
            os << "gamma_cm," << m + 1 << "," << k + 1 << "," << csv_number(frame.gamma(m, k))
               << "\n";
        }
}

} // namespace pme
