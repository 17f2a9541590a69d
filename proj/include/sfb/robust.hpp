#pragma once

#include <Eigen/Dense>
#include <vector>

namespace sfb::robust {

struct McdEstimate {
  Eigen::VectorXd center;
  Eigen::MatrixXd scatter;
  std::vector<double> rd2;  // squared Mahalanobis distances under the estimate
};

// Deterministic reweighted minimum-covariance-determinant estimate:
// C-steps from a fixed set of starts (robustly standardized norms, classical
// distances, diagonal-MAD distances, and seeded random subsets), consistency
// correction, then one reweighting step at the chi-square 0.975 cutoff.
McdEstimate reweighted_mcd(const Eigen::MatrixXd& x);

}  // namespace sfb::robust
