#include "linalg.hpp"

#include <cmath>
#include <limits>

#include <Eigen/QR>
#include <boost/math/distributions/fisher_f.hpp>

#include "causalcast/error.hpp"
#include "causalcast/stats.hpp"

namespace causalcast {

namespace detail {

LeastSquares least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y,
                           bool require_full_rank) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  LeastSquares out;
  out.rank = qr.rank();
  if (require_full_rank && out.rank < x.cols()) {
    fail(ErrorKind::numerical, "rank-deficient design matrix (rank " + std::to_string(out.rank) +
                                   " of " + std::to_string(x.cols()) + " columns)");
  }
  out.coef = qr.solve(y);
  out.residuals = y - x * out.coef;
  return out;
}

Eigen::MatrixXd residualize(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  if (x.cols() == 0) return y;
  return least_squares(x, y, false).residuals;
}

}  // namespace detail

double normal_sf(double z) { return 0.5 * std::erfc(z / std::sqrt(2.0)); }

double f_sf(double f, double df_num, double df_den) {
  if (std::isinf(f) && f > 0) return 0.0;
  if (!(f > 0.0)) return 1.0;
  boost::math::fisher_f dist(df_num, df_den);
  return boost::math::cdf(boost::math::complement(dist, f));
}

}  // namespace causalcast
