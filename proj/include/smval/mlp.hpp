#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace smval {

/// One-hidden-layer perceptron: inputs -> ReLU hidden -> linear scalar output.
/// Inputs and target are z-scored with statistics stored alongside the
/// weights, so predictions are in the original units.
template <typename Scalar>
struct Mlp {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  Matrix w1;  // hidden x inputs
  Vector b1;  // hidden
  Vector w2;  // hidden
  Scalar b2 = 0;
  Vector feature_mean;
  Vector feature_std;
  Scalar target_mean = 0;
  Scalar target_std = 1;

  Mlp() = default;
  Mlp(Eigen::Index inputs, Eigen::Index hidden)
      : w1(Matrix::Zero(hidden, inputs)),
        b1(Vector::Zero(hidden)),
        w2(Vector::Zero(hidden)),
        feature_mean(Vector::Zero(inputs)),
        feature_std(Vector::Ones(inputs)) {}

  Eigen::Index inputs() const { return w1.cols(); }
  Eigen::Index hidden() const { return w1.rows(); }
  Eigen::Index num_parameters() const { return hidden() * inputs() + 2 * hidden() + 1; }

  // Packed as w1 (row-major), b1, w2, b2.
  Vector parameters() const {
    Vector p(num_parameters());
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < hidden(); ++h)
      for (Eigen::Index i = 0; i < inputs(); ++i) p[k++] = w1(h, i);
    p.segment(k, hidden()) = b1;
    k += hidden();
    p.segment(k, hidden()) = w2;
    k += hidden();
    p[k] = b2;
    return p;
  }

  void set_parameters(const Vector& p) {
    if (p.size() != num_parameters()) throw std::invalid_argument("Mlp: parameter size");
    Eigen::Index k = 0;
    for (Eigen::Index h = 0; h < hidden(); ++h)
      for (Eigen::Index i = 0; i < inputs(); ++i) w1(h, i) = p[k++];
    b1 = p.segment(k, hidden());
    k += hidden();
    w2 = p.segment(k, hidden());
    k += hidden();
    b2 = p[k];
  }

  Matrix standardize(const Matrix& raw) const {
    return (raw.rowwise() - feature_mean.transpose()).array().rowwise() /
           feature_std.transpose().array();
  }
};

/// Standardized outputs for standardized inputs (one sample per row).
template <typename Scalar>
typename Mlp<Scalar>::Vector mlp_forward(const Mlp<Scalar>& net,
                                         const typename Mlp<Scalar>::Matrix& z) {
  const typename Mlp<Scalar>::Matrix pre =
      (z * net.w1.transpose()).rowwise() + net.b1.transpose();
  return (pre.cwiseMax(Scalar(0)) * net.w2).array() + net.b2;
}

/// Mean squared error in standardized target units.
template <typename Scalar>
Scalar mlp_loss(const Mlp<Scalar>& net, const typename Mlp<Scalar>::Matrix& z,
                const typename Mlp<Scalar>::Vector& y) {
  return (mlp_forward(net, z) - y).squaredNorm() / Scalar(z.rows());
}

/// Backpropagated gradient of mlp_loss, packed like Mlp::parameters().
template <typename Scalar>
typename Mlp<Scalar>::Vector mlp_gradient(const Mlp<Scalar>& net,
                                          const typename Mlp<Scalar>::Matrix& z,
                                          const typename Mlp<Scalar>::Vector& y) {
  using Matrix = typename Mlp<Scalar>::Matrix;
  using Vector = typename Mlp<Scalar>::Vector;
  const Matrix pre = (z * net.w1.transpose()).rowwise() + net.b1.transpose();
  const Matrix act = pre.cwiseMax(Scalar(0));
  const Vector out = (act * net.w2).array() + net.b2;
  const Vector d_out = (out - y) * (Scalar(2) / Scalar(z.rows()));

  // dL/dpre = d_out * w2^T masked by the ReLU derivative (0 at the kink).
  const Matrix d_pre = ((d_out * net.w2.transpose()).array() *
                        (pre.array() > Scalar(0)).template cast<Scalar>())
                           .matrix();
  const Matrix g_w1 = d_pre.transpose() * z;

  Vector g(net.num_parameters());
  Eigen::Index k = 0;
  for (Eigen::Index h = 0; h < net.hidden(); ++h)
    for (Eigen::Index i = 0; i < net.inputs(); ++i) g[k++] = g_w1(h, i);
  g.segment(k, net.hidden()) = d_pre.colwise().sum().transpose();
  k += net.hidden();
  g.segment(k, net.hidden()) = act.transpose() * d_out;
  k += net.hidden();
  g[k] = d_out.sum();
  return g;
}

}  // namespace smval
