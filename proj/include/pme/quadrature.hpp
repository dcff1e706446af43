// quadrature.hpp — Composite Gauss-Legendre quadrature on frequency panels

#pragma once

#include <vector>

#include "pme/types.hpp"

namespace pme::quad {

struct Settings {
    int nodes_per_panel{16};
    double omega_max{0.0};   // 1/cm; 0 selects the spectral-density default
    double t_ref_fs{0.0};    // longest time whose oscillations the nodes must resolve
};

// Nodes and weights of n-point Gauss-Legendre on [-1, 1]. Cached per order.
void gauss_legendre(int n, RealVector& nodes, RealVector& weights);

// Panel boundaries on [0, omega_max]: geometric growth from omega_floor
// (refinement toward zero), optional dense windows, and a global width cap
// for oscillatory integrands (0 = none).
std::vector<double> panel_boundaries(double omega_max, double omega_floor,
                                     double max_width,
                                     const std::vector<std::pair<double, double>>& dense_windows,
                                     double dense_width);

struct NodeSet {
    RealVector omega;
    RealVector weight;
    double omega_max{0.0};
    int panels{0};

    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (Index k = 0; k < omega.size(); ++k) acc += weight[k] * f(omega[k]);
        return acc;
    }
};

NodeSet assemble_nodes(const std::vector<double>& boundaries, int nodes_per_panel);

} // namespace pme::quad
