#include "pme/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "pme/errors.hpp"

namespace pme::quad {

namespace {

std::map<int, std::pair<RealVector, RealVector>> g_gl_cache;
std::mutex g_gl_mutex;

// Newton iteration on Legendre polynomials, nodes symmetric about zero.
std::pair<RealVector, RealVector> compute_gauss_legendre(int n) {
    RealVector x(n), w(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    return {x, w};
}

} // namespace

void gauss_legendre(int n, RealVector& nodes, RealVector& weights) {
    if (n < 1) throw DomainError("gauss_legendre: order must be positive");
    std::lock_guard<std::mutex> lock(g_gl_mutex);
    auto it = g_gl_cache.find(n);
    if (it == g_gl_cache.end()) it = g_gl_cache.emplace(n, compute_gauss_legendre(n)).first;
    nodes = it->second.first;
    weights = it->second.second;
}

std::vector<double> panel_boundaries(double omega_max, double omega_floor, double max_width,
                                     const std::vector<std::pair<double, double>>& dense_windows,
                                     double dense_width) {
    if (omega_max <= 0.0) throw DomainError("panel_boundaries: omega_max must be positive");
    omega_floor = std::clamp(omega_floor, omega_max * 1e-9, omega_max * 0.5);

    std::vector<double> b{0.0, omega_floor};
    constexpr double growth = 1.35;
    double w = omega_floor;
    while (b.back() < omega_max) {
        w *= growth;
        b.push_back(std::min(b.back() + w, omega_max));
    }

    for (const auto& [lo, hi] : dense_windows) {
        const double a = std::max(lo, 0.0);
        if (hi <= a || a >= omega_max) continue;
        const double top = std::min(hi, omega_max);
        const int nd = std::max(2, static_cast<int>(std::ceil((top - a) / dense_width)));
        for (int i = 0; i <= nd; ++i) b.push_back(a + (top - a) * i / nd);
    }

    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end(),
                        [&](double p, double q) { return q - p < omega_max * 1e-12; }),
            b.end());

    if (max_width > 0.0) {
        std::vector<double> refined{b.front()};
        for (std::size_t i = 1; i < b.size(); ++i) {
            const double lo = b[i - 1], hi = b[i];
            const int splits = static_cast<int>(std::ceil((hi - lo) / max_width));
            for (int s = 1; s <= splits; ++s) refined.push_back(lo + (hi - lo) * s / splits);
        }
        b = std::move(refined);
    }
    return b;
}

NodeSet assemble_nodes(const std::vector<double>& boundaries, int nodes_per_panel) {
    if (boundaries.size() < 2) throw DomainError("assemble_nodes: need at least one panel");
    RealVector gx, gw;
    gauss_legendre(nodes_per_panel, gx, gw);

    const Index panels = static_cast<Index>(boundaries.size()) - 1;
    NodeSet ns;
    ns.omega.resize(panels * nodes_per_panel);
    ns.weight.resize(panels * nodes_per_panel);
    ns.omega_max = boundaries.back();
    ns.panels = static_cast<int>(panels);
    Index k = 0;
    for (Index p = 0; p < panels; ++p) {
        const double lo = boundaries[p], hi = boundaries[p + 1];
        const double mid = 0.5 * (lo + hi), half = 0.5 * (hi - lo);
        for (int j = 0; j < nodes_per_panel; ++j, ++k) {
            ns.omega[k] = mid + half * gx[j];
            ns.weight[k] = half * gw[j];
        }
    }
    return ns;
}

} // namespace pme::quad
