// inhom.hpp — Non-equilibrium source terms from the initially displaced bath

#pragma once

#include <array>
#include <vector>

#include "pme/bath.hpp"
#include "pme/polaron.hpp"
#include "pme/rates.hpp"

namespace pme {

enum class XiPhase { S, T };

// First-order rate tensor Upsilon_{ij,ab}(t) = sum_A V_A u(m,a) u(n,b)
// beta_A (f_{ij,A}(t) - 1), returned as an N x N matrix over (a, b).
ComplexMatrix inhom_first_order(const KernelTables& kernels, const PolaronFrame& frame,
                                const SiteNetwork& net, int i, int j, double t_fs);

// Second-order tensors Xi^c_{ij}[(ab),(mn)](t) by direct trapezoid quadrature
// on an s-grid of step ds; the reference path for the streaming engine.
std::array<ComplexMatrix, 4> xi_tensors_direct(const KernelTables& kernels,
                                               const PolaronFrame& frame, const SiteNetwork& net,
                                               int i, int j, double t_fs, double ds_fs,
                                               XiPhase phase = XiPhase::S);

// Streaming evaluator of the full source term I(t) on a fixed stage grid.
// Splits each s-integral into cumulative pieces advanced per stage and one
// true convolution evaluated as a vector dot against reversed kernel arrays.
class InhomEngine {
public:
    InhomEngine(const KernelTables& kernels, const PolaronFrame& frame, const SiteNetwork& net,
                const InitialState& initial, double ds_fs, double t_max_fs,
                XiPhase phase = XiPhase::S);

    double ds() const { return ds_; }
    Index n_stages() const { return n_stages_; }
    const std::vector<std::pair<int, int>>& active_elements() const { return active_; }

    // Advances the cumulative state; stages must be visited in order.
    void advance_to(Index stage);

    // Hermitian source matrix I(t_k) (eigenbasis, 1/fs); requires advance_to(stage).
    ComplexMatrix source_matrix(Index stage) const;

    // Xi tensors of one initial-state element at the current stage, for cross-checks.
    std::array<ComplexMatrix, 4> xi_tensors(Index stage, int i, int j) const;

private:
    struct PerElement {
        int i{0}, j{0};
        Complex rho0;                          // polaron-frame initial element
        std::vector<ComplexVector> f, fprime;  // per pair, on the s-grid
        std::vector<ComplexVector> q_plus_f;   // phase(+mn) * f,  per (pair, mn)
        std::vector<ComplexVector> q_minus_fp; // phase(-mn) * f', per (pair, mn)
        std::vector<Complex> cum1_plus_f;      // running trapezoids, per (pair, mn)
        std::vector<Complex> cum1_minus_fp;
    };

    // All four channel xi scalars for one (A, B, mn) slot at the given stage.
    std::array<Complex, 4> xi_scalars(Index stage, const PerElement& el, int a, int b,
                                      Index q) const;

    int combo(int a, int b) const;
    int n_pairs() const { return weights_.n_pairs(); }
    Index qidx(int pair, Index q) const { return static_cast<Index>(pair) * eps_mn_.size() + q; }

    const KernelTables* kernels_;
    const PolaronFrame* frame_;
    PairWeights weights_;
    double ds_{0.0};
    Index n_stages_{0};
    XiPhase phase_mode_{XiPhase::S};
    Index current_{-1};

    RealVector eps_mn_;                           // N^2 gaps
    ComplexMatrix phase_plus_;                    // e^{+i k eps_mn s_k}, (mn) x stage
    std::vector<ComplexVector> x_minus_, x_plus_; // exp(-h ± K) per combo (a <= b)
    std::vector<ComplexVector> x_minus_rev_, x_plus_rev_;
    std::vector<double> exp_neg_h_;               // per combo
    // cumulative trapezoids: cum_x_[family][combo * n2 + q], families (sigma, zeta)
    // ordered as channels: (+,-), (+,+), (-,+), (-,-)
    std::array<std::vector<Complex>, 4> cum_x_;
    std::array<std::vector<Complex>, 2> ph_; // sigma = +, - per mn

    std::vector<std::pair<int, int>> active_;
    std::vector<PerElement> elements_;
    std::vector<ComplexMatrix> p_ij_; // site transition operators, eigenbasis
};

} // namespace pme
