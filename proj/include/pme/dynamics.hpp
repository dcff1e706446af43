// dynamics.hpp — Generator assembly and density-vector propagation

#pragma once

#include <array>
#include <string>
#include <vector>

#include "pme/inhom.hpp"
#include "pme/polaron.hpp"
#include "pme/rates.hpp"

namespace pme {

enum class Propagator { Full, HomOnly, Markov, Secular, Redfield, Foerster };

std::string propagator_name(Propagator tag);
Propagator propagator_from_name(const std::string& name); // throws ConfigError

struct PropagatorConfig {
    double dt_fs{0.5};
    double t_max_fs{1000.0};
    Propagator tag{Propagator::Full};
    bool include_inhomogeneous{true};
    XiPhase xi_phase{XiPhase::S};
    // Zeroes the Hamiltonian renormalization (couplings dressed away) while the
    // bath kernels keep their exact values; the strong-coupling limit check.
    bool force_beta_zero{false};
    double secular_tol_cm{0.01};
    double markov_rel_decay{1e-6};
    double trace_abort_tol{1e-6};
    double positivity_abort_tol{1e-2};
    quad::Settings quad;
    double table_dt_fs{0.0};    // 0: dt/4
    double table_t_max_fs{0.0}; // 0: t_max (extended for Markov-limit propagators)
};

// Time series of the polaron-frame density matrix in the renormalized exciton
// basis (Schroedinger picture), plus the frame and initial state it belongs to.
struct Trajectory {
    RealVector times;
    std::vector<ComplexMatrix> rho;
    Propagator tag{Propagator::Full};
    PolaronFrame frame;
    InitialState initial;

    Index n_steps() const { return times.size(); }
    const ComplexMatrix& rho_eigen(Index k) const { return rho[static_cast<std::size_t>(k)]; }
    ComplexMatrix rho_site(Index k) const; // rotated to the site basis
};

// Homogeneous generator at time t from the mn-phased rate tensors: the four
// commutator families, their ab phases, the h.c. closure, and the kappa^2 scale.
ComplexMatrix assemble_generator(const std::array<ComplexMatrix, 4>& gamma,
                                 const PolaronFrame& frame, double t_fs);

// Flattened source vector from the inhomogeneous engine at a stage index.
ComplexVector assemble_source(InhomEngine& engine, Index stage);

Trajectory propagate(const SiteNetwork& net, const BathSpec& bath, const KernelTables& kernels,
                     const ComplexMatrix& rho0_lab, const PropagatorConfig& config);

// Convenience overload that builds kernel tables with the grid the propagator needs.
Trajectory propagate(const SiteNetwork& net, const BathSpec& bath, const ComplexMatrix& rho0_lab,
                     const PropagatorConfig& config);

// Kernel-table grid the given configuration will use (for table reuse/caching).
std::pair<double, double> kernel_grid_for(const PropagatorConfig& config);

} // namespace pme
