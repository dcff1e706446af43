// types.hpp — Common scalar and dense-matrix aliases

#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace pme {

using Real = double;
using Complex = std::complex<Real>;

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using ComplexVector = Eigen::VectorXcd;
using ComplexMatrix = Eigen::MatrixXcd;

using Index = Eigen::Index;

// Unordered coupled site pair, stored with m < n.
struct SitePair {
    int m{0};
    int n{1};
};

} // namespace pme
