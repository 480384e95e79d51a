#pragma once

#include <irga/panel_data.hpp>

#include <Eigen/Dense>

namespace irga {

// Orthogonal split of an equation by the full QR factorisation of its own-lag
// design, X_own = [Q1 Q2] [R; 0]. The Q2 block annihilates X_own, so
// (y2, z2) carries no information about the own-lag coefficients.
struct RotationSplit {
  Eigen::MatrixXd q1; // T_eff x k
  Eigen::MatrixXd q2; // T_eff x (T_eff - k)
  Eigen::MatrixXd r;  // k x k, non-negative diagonal
  Eigen::VectorXd y1;
  Eigen::VectorXd y2;
  Eigen::MatrixXd x1; // Q1' X_own
  Eigen::MatrixXd z1; // Q1' Z_other
  Eigen::MatrixXd z2; // Q2' Z_other
};

RotationSplit qr_rotation(const Eigen::MatrixXd& x_own, const Eigen::VectorXd& y, const Eigen::MatrixXd& z_other);

inline RotationSplit qr_rotation(const EquationDesign& design) {
  return qr_rotation(design.x_own, design.y, design.z_other);
}

} // namespace irga
