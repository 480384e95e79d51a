#include <irga/rotation.hpp>

#include <irga/error.hpp>

#include <cmath>
#include <string>

namespace irga {

RotationSplit qr_rotation(const Eigen::MatrixXd& x_own, const Eigen::VectorXd& y, const Eigen::MatrixXd& z_other) {
  const Eigen::Index T = x_own.rows();
  const Eigen::Index k = x_own.cols();
  if (y.size() != T || z_other.rows() != T) {
    throw ValidationError("rotation: design blocks have inconsistent row counts");
  }
  if (k == 0 || T <= k) {
    throw ComputeError("insufficient observations for rotation: " + std::to_string(T) + " rows for " +
                       std::to_string(k) + " own-lag columns");
  }

  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x_own);
  Eigen::MatrixXd q = qr.householderQ();
  Eigen::MatrixXd r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();

  const Eigen::VectorXd rdiag = r.diagonal().cwiseAbs();
  const double rmax = rdiag.maxCoeff();
  std::string collinear;
  for (Eigen::Index c = 0; c < k; ++c) {
    if (!(rdiag[c] >= 1e-10 * rmax) || rmax == 0.0) {
      collinear += (collinear.empty() ? "" : ", ") + std::to_string(c);
    }
  }
  if (!collinear.empty()) {
    throw ComputeError("own-lag design is rank deficient; collinear column(s): " + collinear);
  }

  for (Eigen::Index c = 0; c < k; ++c) {
    if (r(c, c) < 0.0) {
      r.row(c) *= -1.0;
      q.col(c) *= -1.0;
    }
  }

  RotationSplit s;
  s.q1 = q.leftCols(k);
  s.q2 = q.rightCols(T - k);
  s.r = std::move(r);
  s.y1 = s.q1.transpose() * y;
  s.y2 = s.q2.transpose() * y;
  s.x1 = s.q1.transpose() * x_own;
  s.z1 = s.q1.transpose() * z_other;
  s.z2 = s.q2.transpose() * z_other;
  return s;
}

} // namespace irga
