#include <doctest.h>

#include <irga/error.hpp>
#include <irga/rotation.hpp>

#include "test_support.hpp"

using namespace irga;
using irga::testing::gaussian_matrix;

namespace {

double inf_norm(const Eigen::MatrixXd& m) { return m.rows() == 0 ? 0.0 : m.rowwise().lpNorm<1>().maxCoeff(); }

Eigen::MatrixXd full_q(const RotationSplit& s) {
  Eigen::MatrixXd q(s.q1.rows(), s.q1.cols() + s.q2.cols());
  q << s.q1, s.q2;
  return q;
}

// Modified Gram-Schmidt on the columns of X: an independent basis of the
// column space.
Eigen::MatrixXd mgs(Eigen::MatrixXd x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    for (Eigen::Index i = 0; i < j; ++i) {
      x.col(j) -= x.col(i).dot(x.col(j)) * x.col(i);
    }
    x.col(j).normalize();
  }
  return x;
}

} // namespace

TEST_CASE("axis-aligned column") {
  Eigen::MatrixXd x(3, 1);
  x << 1, 0, 0;
  const auto s = qr_rotation(x, Eigen::Vector3d(1, 2, 3), Eigen::MatrixXd(3, 0));
  CHECK(std::abs(std::abs(s.q1(0, 0)) - 1.0) < 1e-14);
  CHECK(s.q2.cols() == 2);
  CHECK(s.q2.row(0).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((s.q2.transpose() * x).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("constant column") {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(4, 1);
  const auto s = qr_rotation(x, Eigen::Vector4d::Zero(), Eigen::MatrixXd(4, 0));
  CHECK((s.q1.cwiseAbs().array() - 0.5).abs().maxCoeff() < 1e-14);
  CHECK(s.r(0, 0) == doctest::Approx(2.0));
}

TEST_CASE("random design against a Gram-Schmidt oracle") {
  Rng rng(17);
  const Eigen::MatrixXd x = gaussian_matrix(rng, 50, 5);
  const Eigen::MatrixXd z = gaussian_matrix(rng, 50, 7);
  const Eigen::VectorXd y = draw_std_normal(rng, 50);
  const auto s = qr_rotation(x, y, z);
  const Eigen::MatrixXd q = full_q(s);
  CHECK(inf_norm(q.transpose() * q - Eigen::MatrixXd::Identity(50, 50)) < 1e-10);
  CHECK(inf_norm(s.q2.transpose() * x) < 1e-8 * inf_norm(x));

  // Same column space: the projections onto it agree.
  const Eigen::MatrixXd g = mgs(x);
  CHECK((s.q1 * s.q1.transpose() - g * g.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  // With a non-negative R diagonal, Q1 equals the Gram-Schmidt basis itself.
  CHECK((s.q1 - g).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s.r.diagonal().array() >= 0.0).all());
  CHECK((s.q1 * s.r - x).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("rotated pieces are consistent") {
  Rng rng(5);
  const Eigen::MatrixXd x = gaussian_matrix(rng, 30, 4);
  const Eigen::MatrixXd z = gaussian_matrix(rng, 30, 9);
  const Eigen::VectorXd y = draw_std_normal(rng, 30);
  const auto s = qr_rotation(x, y, z);
  CHECK(s.y1.size() == 4);
  CHECK(s.y2.size() == 26);
  CHECK(s.z1.rows() == 4);
  CHECK(s.z2.rows() == 26);
  CHECK(s.z2.cols() == 9);
  CHECK((s.x1 - s.q1.transpose() * x).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.z2 - s.q2.transpose() * z).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.y1 - s.q1.transpose() * y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("norm is preserved by the split") {
  Rng rng(8);
  for (int rep = 0; rep < 20; ++rep) {
    const int T = 10 + rep * 7;
    const int k = 1 + rep % 6;
    const Eigen::MatrixXd x = gaussian_matrix(rng, T, k);
    const Eigen::VectorXd y = draw_std_normal(rng, T) * (rep + 1.0);
    const auto s = qr_rotation(x, y, Eigen::MatrixXd(T, 0));
    const double total = s.y1.squaredNorm() + s.y2.squaredNorm();
    CHECK(std::abs(total - y.squaredNorm()) <= 1e-10 * y.squaredNorm());
  }
}

TEST_CASE("own-lag OLS is recovered from the rotated equation") {
  Rng rng(23);
  const int T = 40;
  const Eigen::MatrixXd x = gaussian_matrix(rng, T, 3);
  const Eigen::MatrixXd z = gaussian_matrix(rng, T, 5);
  const Eigen::VectorXd y = x * Eigen::Vector3d(0.5, -1.0, 0.2) + z * Eigen::VectorXd::Ones(5) + draw_std_normal(rng, T);
  Eigen::MatrixXd w(T, 8);
  w << x, z;
  const Eigen::VectorXd ols = w.colPivHouseholderQr().solve(y);
  const auto s = qr_rotation(x, y, z);
  const Eigen::VectorXd a = s.x1.partialPivLu().solve(s.y1 - s.z1 * ols.tail(5));
  CHECK((a - ols.head(3)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("collinear own-lag design is rejected") {
  Rng rng(2);
  Eigen::MatrixXd x = gaussian_matrix(rng, 20, 3);
  x.col(2) = 2.0 * x.col(0) - x.col(1);
  CHECK_THROWS_AS(qr_rotation(x, Eigen::VectorXd::Zero(20), Eigen::MatrixXd(20, 0)), ComputeError);
}

TEST_CASE("rotation of an equation design") {
  const auto ds = irga::testing::noise_panel({2, 2}, 30);
  const auto d = build_equation_design(ds, 1, 0, 2);
  const auto s = qr_rotation(d);
  CHECK(s.q1.cols() == d.k());
  CHECK(s.q2.cols() == d.T_eff() - d.k());
  CHECK(s.z2.cols() == d.K());
}
