#pragma once

/// @file
/// SE(3) / SO(3) group operations and tangent-space maps.
///
/// Twist layout (single source of truth for every 6-vector and 6x6 matrix in
/// this library):
///
///   xi = [ wx wy wz vx vy vz ]   rotation first, then translation
///
/// Poses are perturbed on the right (body frame): p' = p * exp(xi).

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/Cholesky>

#include <cmath>
#include <random>
#include <stdexcept>

namespace ambislam {

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar>
using Twist = Eigen::Matrix<Scalar, 6, 1>;
template <typename Scalar>
using Matrix6 = Eigen::Matrix<Scalar, 6, 6>;
template <typename Scalar>
using Covariance6 = Eigen::Matrix<Scalar, 6, 6>;

using Twist6d = Twist<double>;
using Matrix6d = Matrix6<double>;
using Covariance6d = Covariance6<double>;

/// Thrown by log() when the rotation angle is within this distance of pi,
/// where the rotation axis sign is not unique.
inline constexpr double kLogBranchTolerance = 1e-6;

class BranchAmbiguityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Rigid transform stored as unit quaternion + translation.
template <typename Scalar>
class Pose {
 public:
  using Quaternion = Eigen::Quaternion<Scalar>;

  Pose() : rotation_(Quaternion::Identity()), translation_(Vector3<Scalar>::Zero()) {}

  Pose(const Quaternion& q, const Vector3<Scalar>& t) : rotation_(q.normalized()), translation_(t) {}

  Pose(const Matrix3<Scalar>& R, const Vector3<Scalar>& t) : rotation_(Quaternion(R).normalized()), translation_(t) {}

  /// Takes the quaternion verbatim; caller guarantees unit norm.
  static Pose fromUnitQuaternion(const Quaternion& q, const Vector3<Scalar>& t) {
    Pose p;
    p.rotation_ = q;
    p.translation_ = t;
    return p;
  }

  static Pose Identity() { return Pose(); }

  const Quaternion& rotation() const { return rotation_; }
  const Vector3<Scalar>& translation() const { return translation_; }
  Matrix3<Scalar> rotationMatrix() const { return rotation_.toRotationMatrix(); }

  Eigen::Matrix<Scalar, 4, 4> matrix() const {
    Eigen::Matrix<Scalar, 4, 4> m = Eigen::Matrix<Scalar, 4, 4>::Identity();
    m.template topLeftCorner<3, 3>() = rotationMatrix();
    m.template topRightCorner<3, 1>() = translation_;
    return m;
  }

  Pose inverse() const {
    const Quaternion qi = rotation_.conjugate();
    return fromUnitQuaternion(qi, -(qi * translation_));
  }

  Vector3<Scalar> operator*(const Vector3<Scalar>& point) const { return rotation_ * point + translation_; }

  bool allFinite() const { return rotation_.coeffs().allFinite() && translation_.allFinite(); }

  /// Bit-identical coefficients.
  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation_.coeffs() == b.rotation_.coeffs() && a.translation_ == b.translation_;
  }

  template <typename Other>
  Pose<Other> cast() const {
    return Pose<Other>::fromUnitQuaternion(rotation_.template cast<Other>(), translation_.template cast<Other>());
  }

 private:
  Quaternion rotation_;
  Vector3<Scalar> translation_;
};

using Pose3d = Pose<double>;

template <typename Scalar>
Pose<Scalar> compose(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return Pose<Scalar>((a.rotation() * b.rotation()).normalized(), a.rotation() * b.translation() + a.translation());
}

template <typename Scalar>
Pose<Scalar> operator*(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return compose(a, b);
}

/// inverse(a) * b
template <typename Scalar>
Pose<Scalar> between(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  const auto qi = a.rotation().conjugate();
  return Pose<Scalar>((qi * b.rotation()).normalized(), qi * (b.translation() - a.translation()));
}

template <typename Scalar>
Matrix3<Scalar> hat(const Vector3<Scalar>& w) {
  Matrix3<Scalar> m;
  m << Scalar(0), -w.z(), w.y(),
       w.z(), Scalar(0), -w.x(),
       -w.y(), w.x(), Scalar(0);
  return m;
}

namespace so3 {

template <typename Scalar>
Eigen::Quaternion<Scalar> exp(const Vector3<Scalar>& w) {
  const Scalar theta = w.norm();
  const Scalar half = theta / Scalar(2);
  Scalar k;  // sin(theta/2) / theta
  if (theta < Scalar(1e-5)) {
    k = Scalar(0.5) - theta * theta / Scalar(48);
  } else {
    k = std::sin(half) / theta;
  }
  return Eigen::Quaternion<Scalar>(std::cos(half), k * w.x(), k * w.y(), k * w.z()).normalized();
}

/// Principal logarithm, angle in [0, pi]. Never throws.
template <typename Scalar>
Vector3<Scalar> log(const Eigen::Quaternion<Scalar>& q_in) {
  Eigen::Quaternion<Scalar> q = q_in;
  if (q.w() < Scalar(0)) q.coeffs() = -q.coeffs();
  const Vector3<Scalar> v = q.vec();
  const Scalar s = v.norm();
  const Scalar theta = Scalar(2) * std::atan2(s, q.w());
  if (s < Scalar(1e-8)) {
    // theta ~ 2 s / w, so theta / s ~ 2 / w (1 + s^2 / (3 w^2))
    const Scalar w = q.w();
    return (Scalar(2) / w - Scalar(2) * s * s / (Scalar(3) * w * w * w)) * v;
  }
  return (theta / s) * v;
}

/// Geodesic angle of a rotation, in [0, pi].
template <typename Scalar>
Scalar angle(const Eigen::Quaternion<Scalar>& q) {
  const Scalar s = q.vec().norm();
  return Scalar(2) * std::atan2(s, std::abs(q.w()));
}

/// Right Jacobian of SO(3).
template <typename Scalar>
Matrix3<Scalar> rightJacobian(const Vector3<Scalar>& w) {
  const Scalar theta2 = w.squaredNorm();
  const Matrix3<Scalar> W = hat(w);
  if (theta2 < Scalar(1e-10)) {
    return Matrix3<Scalar>::Identity() - Scalar(0.5) * W + W * W / Scalar(6);
  }
  const Scalar theta = std::sqrt(theta2);
  return Matrix3<Scalar>::Identity() - (Scalar(1) - std::cos(theta)) / theta2 * W +
         (theta - std::sin(theta)) / (theta2 * theta) * W * W;
}

/// Inverse of the right Jacobian of SO(3).
template <typename Scalar>
Matrix3<Scalar> rightJacobianInverse(const Vector3<Scalar>& w) {
  const Scalar theta2 = w.squaredNorm();
  const Matrix3<Scalar> W = hat(w);
  if (theta2 < Scalar(1e-10)) {
    return Matrix3<Scalar>::Identity() + Scalar(0.5) * W + W * W / Scalar(12);
  }
  const Scalar theta = std::sqrt(theta2);
  const Scalar c = Scalar(1) / theta2 - Scalar(1) / (Scalar(2) * theta * std::tan(theta / Scalar(2)));
  return Matrix3<Scalar>::Identity() + Scalar(0.5) * W + c * W * W;
}

template <typename Scalar>
Matrix3<Scalar> leftJacobian(const Vector3<Scalar>& w) {
  return rightJacobian<Scalar>(-w);
}

}  // namespace so3

namespace detail {

/// The coupling block Q of the SE(3) left Jacobian, for rotation w and
/// translation part v of a twist.
template <typename Scalar>
Matrix3<Scalar> leftJacobianQ(const Vector3<Scalar>& w, const Vector3<Scalar>& v) {
  const Matrix3<Scalar> W = hat(w);
  const Matrix3<Scalar> V = hat(v);
  const Scalar theta2 = w.squaredNorm();
  const Matrix3<Scalar> WV = W * V;
  const Matrix3<Scalar> VW = V * W;
  const Matrix3<Scalar> WVW = WV * W;
  Scalar a, b, c;
  if (theta2 < Scalar(1e-6)) {
    // Taylor coefficients of the closed form below.
    a = Scalar(1) / Scalar(6) - theta2 / Scalar(120);
    b = Scalar(1) / Scalar(24) - theta2 / Scalar(720);
    c = Scalar(1) / Scalar(60) - theta2 / Scalar(1260);
    return Scalar(0.5) * V + a * (WV + VW + WVW) + b * (W * WV + VW * W - Scalar(3) * WVW) +
           Scalar(0.5) * c * (WVW * W + W * WVW);
  }
  const Scalar theta = std::sqrt(theta2);
  const Scalar s = std::sin(theta);
  const Scalar co = std::cos(theta);
  a = (theta - s) / (theta2 * theta);
  b = (theta2 + Scalar(2) * co - Scalar(2)) / (Scalar(2) * theta2 * theta2);
  c = (Scalar(2) * theta - Scalar(3) * s + theta * co) / (theta2 * theta2 * theta);
  return Scalar(0.5) * V + a * (WV + VW + WVW) + b * (W * WV + VW * W - Scalar(3) * WVW) +
         Scalar(0.5) * c * (WVW * W + W * WVW);
}

}  // namespace detail

template <typename Scalar>
Pose<Scalar> exp(const Twist<Scalar>& xi) {
  if (!xi.allFinite()) throw std::invalid_argument("exp: non-finite twist");
  const Vector3<Scalar> w = xi.template head<3>();
  const Vector3<Scalar> v = xi.template tail<3>();
  return Pose<Scalar>::fromUnitQuaternion(so3::exp(w), so3::leftJacobian(w) * v);
}

/// Principal logarithm. Never throws; at angle pi the axis sign is whatever
/// the quaternion representation yields.
template <typename Scalar>
Twist<Scalar> logPrincipal(const Pose<Scalar>& p) {
  const Vector3<Scalar> w = so3::log(p.rotation());
  const Matrix3<Scalar> Jl = so3::leftJacobian(w);
  Twist<Scalar> xi;
  xi.template head<3>() = w;
  xi.template tail<3>() = Jl.inverse() * p.translation();
  return xi;
}

/// Logarithm; throws BranchAmbiguityError within kLogBranchTolerance of pi.
template <typename Scalar>
Twist<Scalar> log(const Pose<Scalar>& p) {
  if (so3::angle(p.rotation()) > Scalar(M_PI - kLogBranchTolerance)) {
    throw BranchAmbiguityError("log: rotation angle within tolerance of pi");
  }
  return logPrincipal(p);
}

/// Adjoint: exp(Ad(p) xi) = p exp(xi) p^-1.
template <typename Scalar>
Matrix6<Scalar> adjoint(const Pose<Scalar>& p) {
  const Matrix3<Scalar> R = p.rotationMatrix();
  Matrix6<Scalar> A = Matrix6<Scalar>::Zero();
  A.template topLeftCorner<3, 3>() = R;
  A.template bottomRightCorner<3, 3>() = R;
  A.template bottomLeftCorner<3, 3>() = hat<Scalar>(p.translation()) * R;
  return A;
}

template <typename Scalar>
Matrix6<Scalar> leftJacobian(const Twist<Scalar>& xi) {
  const Vector3<Scalar> w = xi.template head<3>();
  const Vector3<Scalar> v = xi.template tail<3>();
  const Matrix3<Scalar> J = so3::leftJacobian(w);
  Matrix6<Scalar> out = Matrix6<Scalar>::Zero();
  out.template topLeftCorner<3, 3>() = J;
  out.template bottomRightCorner<3, 3>() = J;
  out.template bottomLeftCorner<3, 3>() = detail::leftJacobianQ(w, v);
  return out;
}

/// log(exp(xi) exp(d)) ~ xi + rightJacobianInverse(xi) d
template <typename Scalar>
Matrix6<Scalar> rightJacobian(const Twist<Scalar>& xi) {
  return leftJacobian<Scalar>(-xi);
}

template <typename Scalar>
Matrix6<Scalar> rightJacobianInverse(const Twist<Scalar>& xi) {
  const Twist<Scalar> m = -xi;
  const Vector3<Scalar> w = m.template head<3>();
  const Vector3<Scalar> v = m.template tail<3>();
  const Matrix3<Scalar> Jinv = so3::rightJacobianInverse<Scalar>(xi.template head<3>());
  Matrix6<Scalar> out = Matrix6<Scalar>::Zero();
  out.template topLeftCorner<3, 3>() = Jinv;
  out.template bottomRightCorner<3, 3>() = Jinv;
  out.template bottomLeftCorner<3, 3>() = -Jinv * detail::leftJacobianQ(w, v) * Jinv;
  return out;
}

/// Geodesic angle between the rotations of a and b, radians in [0, pi].
template <typename Scalar>
Scalar rotationDistance(const Pose<Scalar>& a, const Pose<Scalar>& b) {
  return so3::angle(a.rotation().conjugate() * b.rotation());
}

/// ||t_a - t_b|| + lambda * angle(R_a, R_b).
///
/// Invariant under a common rigid motion applied on the left, g*a vs g*b:
/// both the translation gap and the relative rotation R_a^T R_b are preserved.
template <typename Scalar>
Scalar distance(const Pose<Scalar>& a, const Pose<Scalar>& b, Scalar lambda = Scalar(1)) {
  if (!(lambda > Scalar(0))) throw std::invalid_argument("distance: lambda must be positive");
  return (a.translation() - b.translation()).norm() + lambda * rotationDistance(a, b);
}

/// Zero-mean Gaussian twist with covariance cov. Positive semi-definite input
/// is accepted (zero directions give zero noise); indefinite input throws.
template <typename Scalar, typename Rng>
Twist<Scalar> samplePerturbation(const Covariance6<Scalar>& cov, Rng& rng) {
  Twist<Scalar> n;
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  for (int i = 0; i < 6; ++i) n[i] = normal(rng);
  if (cov.isZero(Scalar(0))) return Twist<Scalar>::Zero();
  Eigen::LLT<Covariance6<Scalar>> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL() * n;
  Eigen::LDLT<Covariance6<Scalar>> ldlt(cov);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() < -Scalar(1e-12) * cov.diagonal().cwiseAbs().maxCoeff()) {
    throw std::invalid_argument("samplePerturbation: covariance is not positive semi-definite");
  }
  const Twist<Scalar> d = ldlt.vectorD().cwiseMax(Scalar(0)).cwiseSqrt();
  Twist<Scalar> y = ldlt.matrixL() * d.cwiseProduct(n).eval();
  return ldlt.transpositionsP().transpose() * y;
}

/// Rotation about the z axis by angle radians.
template <typename Scalar>
Pose<Scalar> yawPose(Scalar angle, const Vector3<Scalar>& t = Vector3<Scalar>::Zero()) {
  return Pose<Scalar>(Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, Vector3<Scalar>::UnitZ())), t);
}

template <typename Scalar>
Scalar yawOf(const Pose<Scalar>& p) {
  const Matrix3<Scalar> R = p.rotationMatrix();
  return std::atan2(R(1, 0), R(0, 0));
}

template <typename Scalar>
bool isApprox(const Pose<Scalar>& a, const Pose<Scalar>& b, Scalar tol) {
  return (a.translation() - b.translation()).norm() <= tol && rotationDistance(a, b) <= tol;
}

}  // namespace ambislam
