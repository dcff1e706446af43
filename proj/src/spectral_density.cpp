#include "pme/spectral_density.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pme/errors.hpp"
#include "pme/units.hpp"

namespace pme {

namespace {
constexpr double seven_factorial_twice = 10080.0; // 7! * 2
}

double SpectralDensity::continuum_value(double omega_cm) const {
    if (omega_cm <= 0.0 || continuum.empty() || scale_continuum == 0.0) return 0.0;
    double norm = 0.0;
    for (const auto& term : continuum) norm += term.weight;
    if (norm <= 0.0) return 0.0;
    double acc = 0.0;
    for (const auto& term : continuum) {
        const double wi = term.cutoff_cm;
        const double w4 = wi * wi * wi * wi;
        acc += term.weight * std::pow(omega_cm, 5) / (seven_factorial_twice * w4) *
               std::exp(-std::sqrt(omega_cm / wi));
    }
    return scale_continuum * acc / norm;
}

double SpectralDensity::mode_value(double omega_cm) const {
    if (omega_cm <= 0.0 || !mode || mode->weight == 0.0) return 0.0;
    const double wh = mode->omega_cm;
    const double eps = mode->width_cm;
    const double d = omega_cm * omega_cm - wh * wh;
    const double denom = d * d + eps * eps * omega_cm * omega_cm;
    return mode->weight * (2.0 * wh / M_PI) * std::pow(omega_cm, 3) * eps / denom;
}

double SpectralDensity::operator()(double omega_cm) const {
    if (omega_cm < 0.0) throw DomainError("spectral density evaluated at negative frequency");
    return continuum_value(omega_cm) + mode_value(omega_cm);
}

double coth_thermal(double omega_cm, double kT_cm) {
    const double x = omega_cm / (2.0 * kT_cm);
    if (omega_cm < 1e-3 * kT_cm) return 2.0 * kT_cm / omega_cm + omega_cm / (6.0 * kT_cm);
    if (x > 350.0) return 1.0;
    return 1.0 + 2.0 / std::expm1(2.0 * x);
}

std::vector<double> bath_panel_plan(const SpectralDensity& sd, double kT_cm,
                                    const quad::Settings& settings) {
    double omega_max = settings.omega_max;
    double max_cutoff = 0.0;
    for (const auto& term : sd.continuum) max_cutoff = std::max(max_cutoff, term.cutoff_cm);
    if (omega_max <= 0.0) {
        omega_max = 4000.0;
        if (sd.mode) omega_max = std::max(omega_max, 20.0 * sd.mode->omega_cm);
        omega_max = std::max(omega_max, 4000.0 * max_cutoff);
    }

    double floor_scale = omega_max;
    for (const auto& term : sd.continuum) floor_scale = std::min(floor_scale, term.cutoff_cm);
    if (sd.mode) floor_scale = std::min(floor_scale, sd.mode->omega_cm);
    if (kT_cm > 0.0) floor_scale = std::min(floor_scale, kT_cm);
    const double omega_floor = floor_scale * 1e-2;

    std::vector<std::pair<double, double>> windows;
    double dense_width = omega_max;
    if (sd.mode && sd.mode->weight != 0.0) {
        windows.emplace_back(sd.mode->omega_cm - 3.0 * sd.mode->width_cm,
                             sd.mode->omega_cm + 3.0 * sd.mode->width_cm);
        dense_width = sd.mode->width_cm / 4.0;
    }

    double max_width = 0.0;
    if (settings.t_ref_fs > 0.0)
        max_width = 1.6 * 2.0 * M_PI / (units::kappa * settings.t_ref_fs);

    auto bounds = quad::panel_boundaries(omega_max, omega_floor, max_width, windows, dense_width);
    if (sd.mode && sd.mode->weight != 0.0) {
        // graded anchors resolve the Lorentzian wings outside the dense window
        for (double scale = 3.0; scale <= 192.0; scale *= 2.0) {
            for (const double side : {-1.0, 1.0}) {
                const double w = sd.mode->omega_cm + side * scale * sd.mode->width_cm;
                if (w > 0.0 && w < omega_max) bounds.push_back(w);
            }
        }
        std::sort(bounds.begin(), bounds.end());
        bounds.erase(std::unique(bounds.begin(), bounds.end(),
                                 [&](double p, double q) { return q - p < omega_max * 1e-12; }),
                     bounds.end());
    }
    return bounds;
}

quad::NodeSet bath_nodes(const SpectralDensity& sd, double kT_cm, const quad::Settings& settings) {
    return quad::assemble_nodes(bath_panel_plan(sd, kT_cm, settings), settings.nodes_per_panel);
}

double reorganization_energy(const SpectralDensity& sd, const quad::Settings& settings) {
    const auto integrand = [&](double w) { return sd(w) / w; };

    const auto ns = bath_nodes(sd, 0.0, settings);
    const double lambda = ns.integrate(integrand);

    quad::Settings doubled = settings;
    doubled.nodes_per_panel = settings.nodes_per_panel * 2;
    const double lambda2 = bath_nodes(sd, 0.0, doubled).integrate(integrand);

    const double scale = std::max(std::abs(lambda), std::abs(lambda2));
    if (scale > 0.0 && std::abs(lambda - lambda2) > 1e-6 * scale) {
        std::ostringstream os;
        os << "reorganization energy quadrature not converged: " << lambda << " vs " << lambda2
           << " (" << ns.omega.size() << " nodes, omega_max " << ns.omega_max << ")";
        throw NumericalError(os.str());
    }
    return lambda2;
}

double continuum_peak_frequency(const SpectralDensity& sd) {
    if (sd.continuum.empty()) return 0.0;
    double lo = sd.continuum.front().cutoff_cm, hi = lo;
    for (const auto& term : sd.continuum) {
        lo = std::min(lo, term.cutoff_cm);
        hi = std::max(hi, term.cutoff_cm);
    }
    // Each term peaks at 100 * cutoff; scan a bracket around all of them.
    lo *= 100.0 / 30.0;
    hi *= 100.0 * 30.0;

    const auto j0 = [&](double w) {
        SpectralDensity bare = sd;
        bare.scale_continuum = 1.0;
        bare.mode.reset();
        return bare.continuum_value(w);
    };

    const int samples = 4096;
    double best_w = lo, best_v = -1.0;
    for (int i = 0; i <= samples; ++i) {
        const double w = lo * std::pow(hi / lo, static_cast<double>(i) / samples);
        const double v = j0(w);
        if (v > best_v) {
            best_v = v;
            best_w = w;
        }
    }
    // Golden-section polish inside the bracketing interval.
    double a = best_w / std::pow(hi / lo, 1.0 / samples);
    double b = best_w * std::pow(hi / lo, 1.0 / samples);
    constexpr double phi = 0.6180339887498949;
    double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
    double f1 = j0(x1), f2 = j0(x2);
    for (int it = 0; it < 200 && (b - a) > 1e-12 * best_w; ++it) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = j0(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = j0(x1);
        }
    }
    return 0.5 * (a + b);
}

} // namespace pme
