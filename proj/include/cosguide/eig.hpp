#pragma once

#include <Eigen/Dense>
#include <complex>

namespace cosguide {

/// Generalized eigenpairs of (a, b): a v = (alpha/beta) b v. Eigenvalues
/// are reported as (alpha, beta) pairs so singular pencils (beta = 0, the
/// infinite eigenvalues) survive untouched; b is never inverted.
struct GeneralizedEig {
    Eigen::VectorXcd alpha;
    Eigen::VectorXcd beta;
    Eigen::MatrixXcd vectors; // right eigenvectors, one per column
};

GeneralizedEig generalized_eig(Eigen::MatrixXcd a, Eigen::MatrixXcd b);

} // namespace cosguide
