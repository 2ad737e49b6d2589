#pragma once

#include <Eigen/Core>

namespace causalcast::detail {

struct LeastSquares {
  Eigen::MatrixXd coef;       // k x m
  Eigen::MatrixXd residuals;  // n x m
  Eigen::Index rank = 0;
};

// Column-pivoted Householder QR; never forms X'X. Throws Error(numerical)
// when X is rank deficient and `require_full_rank` is set.
LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           bool require_full_rank = true);

// Residuals of y after projecting onto span(x); no rank requirement.
Eigen::MatrixXd residualize(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y);

}  // namespace causalcast::detail
