#pragma once

#include <array>
#include <cstddef>

#include <Eigen/Dense>

namespace brachi {

// Chart dimensions are small; fixed upper bounds keep every evaluation on the stack.
inline constexpr int kMaxDim = 6;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxDim, kMaxDim>;

// Gamma^a_{bc}, stored a-major.
class Christoffel {
 public:
  Christoffel() = default;
  explicit Christoffel(int m) : m_(m) { data_.fill(0.0); }

  int dim() const { return m_; }
  double& operator()(int a, int b, int c) { return data_[idx(a, b, c)]; }
  double operator()(int a, int b, int c) const { return data_[idx(a, b, c)]; }

  // Gamma(v, w)^a = Gamma^a_{bc} v^b w^c
  Vec contract(const Vec& v, const Vec& w) const {
    Vec out = Vec::Zero(m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c) out[a] += (*this)(a, b, c) * v[b] * w[c];
    return out;
  }

  // matrix M^a_c = Gamma^a_{bc} v^b, so that Gamma(v, w) = M w
  Mat along(const Vec& v) const {
    Mat out = Mat::Zero(m_, m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c) out(a, c) += (*this)(a, b, c) * v[b];
    return out;
  }

 private:
  static std::size_t idx(int a, int b, int c) {
    return static_cast<std::size_t>((a * kMaxDim + b) * kMaxDim + c);
  }
  int m_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim> data_{};
};

// R^a_{bcd} with R(d_c, d_d) d_b = R^a_{bcd} d_a and
// R(X,Y) = nabla_X nabla_Y - nabla_Y nabla_X - nabla_[X,Y].
class Riemann {
 public:
  Riemann() = default;
  explicit Riemann(int m) : m_(m) { data_.fill(0.0); }

  int dim() const { return m_; }
  double& operator()(int a, int b, int c, int d) { return data_[idx(a, b, c, d)]; }
  double operator()(int a, int b, int c, int d) const { return data_[idx(a, b, c, d)]; }

  // R(x, y) z
  Vec apply(const Vec& x, const Vec& y, const Vec& z) const {
    Vec out = Vec::Zero(m_);
    for (int a = 0; a < m_; ++a) {
      double s = 0.0;
      for (int b = 0; b < m_; ++b) {
        if (z[b] == 0.0) continue;
        for (int c = 0; c < m_; ++c) {
          if (x[c] == 0.0) continue;
          for (int d = 0; d < m_; ++d) s += (*this)(a, b, c, d) * z[b] * x[c] * y[d];
        }
      }
      out[a] = s;
    }
    return out;
  }

  // linear map v -> R(x, v) z
  Mat operator_x_z(const Vec& x, const Vec& z) const {
    Mat out = Mat::Zero(m_, m_);
    for (int a = 0; a < m_; ++a)
      for (int b = 0; b < m_; ++b)
        for (int c = 0; c < m_; ++c)
          for (int d = 0; d < m_; ++d) out(a, d) += (*this)(a, b, c, d) * z[b] * x[c];
    return out;
  }

 private:
  static std::size_t idx(int a, int b, int c, int d) {
    return static_cast<std::size_t>(((a * kMaxDim + b) * kMaxDim + c) * kMaxDim + d);
  }
  int m_ = 0;
  std::array<double, kMaxDim * kMaxDim * kMaxDim * kMaxDim> data_{};
};

}  // namespace brachi
