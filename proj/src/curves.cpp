#include "brachi/curves.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace brachi {

namespace {

// d/dx of the Lagrange basis polynomials through xs, evaluated at x.
template <std::size_t K>
std::array<double, K> lagrange_derivative_weights(const std::array<double, K>& xs, double x) {
  std::array<double, K> w{};
  for (std::size_t j = 0; j < K; ++j) {
    double sum = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      if (k == j) continue;
      double prod = 1.0 / (xs[j] - xs[k]);
      for (std::size_t l = 0; l < K; ++l) {
        if (l == j || l == k) continue;
        prod *= (x - xs[l]) / (xs[j] - xs[l]);
      }
      sum += prod;
    }
    w[j] = sum;
  }
  return w;
}

template <std::size_t K>
std::array<double, K> lagrange_values(const std::array<double, K>& xs, double x) {
  std::array<double, K> w{};
  for (std::size_t j = 0; j < K; ++j) {
    double prod = 1.0;
    for (std::size_t l = 0; l < K; ++l)
      if (l != j) prod *= (x - xs[l]) / (xs[j] - xs[l]);
    w[j] = prod;
  }
  return w;
}

template <std::size_t K, typename T>
std::vector<T> differentiate_impl(const std::vector<double>& t, const std::vector<T>& f) {
  const int n = static_cast<int>(t.size());
  if (n < static_cast<int>(K)) throw Error(ErrorKind::GridTooCoarse, "too few nodes for the difference stencil");
  std::vector<T> out(f.size());
  const int half = static_cast<int>(K) / 2;
  for (int i = 0; i < n; ++i) {
    const int start = std::clamp(i - half, 0, n - static_cast<int>(K));
    std::array<double, K> xs;
    for (std::size_t j = 0; j < K; ++j) xs[j] = t[start + j];
    const auto w = lagrange_derivative_weights(xs, t[i]);
    T acc = w[0] * f[start];
    for (std::size_t j = 1; j < K; ++j) acc = acc + w[j] * f[start + j];
    out[i] = acc;
  }
  return out;
}

constexpr std::array<double, 3> kGaussX = {0.5 - 0.3872983346207417, 0.5, 0.5 + 0.3872983346207417};
constexpr std::array<double, 3> kGaussW = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};

}  // namespace

std::vector<double> uniform_grid(int N) {
  if (N < 1) throw Error(ErrorKind::GridTooCoarse, "grid needs at least one segment");
  std::vector<double> t(N + 1);
  for (int i = 0; i <= N; ++i) t[i] = static_cast<double>(i) / N;
  t[N] = 1.0;
  return t;
}

void check_curve(const MetricField& geometry, const Curve& c) {
  if (c.t.size() < 2 || c.q.size() != c.t.size() || c.v.size() != c.t.size())
    throw Error(ErrorKind::GridMismatch, "curve arrays have inconsistent lengths");
  if (c.t.front() != 0.0 || c.t.back() != 1.0) throw Error(ErrorKind::InvalidArgument, "curve grid must span [0,1]");
  for (std::size_t i = 1; i < c.t.size(); ++i)
    if (!(c.t[i] > c.t[i - 1])) throw Error(ErrorKind::InvalidArgument, "curve grid must be strictly increasing");
  for (const Event& q : c.q)
    if (!geometry.in_domain(q)) throw Error(ErrorKind::OutOfChart, "curve node outside the chart");
}

void check_hosted(const Curve& c, const FieldAlongCurve& f) {
  if (f.values.size() != c.t.size() || (f.rates && f.rates->size() != c.t.size()))
    throw Error(ErrorKind::GridMismatch, "field is not hosted on this curve");
}

std::vector<Vec> differentiate(const std::vector<double>& t, const std::vector<Vec>& f, DiffOrder order) {
  if (f.size() != t.size()) throw Error(ErrorKind::GridMismatch, "sample count differs from grid");
  return order == DiffOrder::Second ? differentiate_impl<3>(t, f) : differentiate_impl<5>(t, f);
}

std::vector<double> differentiate(const std::vector<double>& t, const std::vector<double>& f, DiffOrder order) {
  if (f.size() != t.size()) throw Error(ErrorKind::GridMismatch, "sample count differs from grid");
  return order == DiffOrder::Second ? differentiate_impl<3>(t, f) : differentiate_impl<5>(t, f);
}

double trapezoid(const std::vector<double>& t, const std::vector<double>& f) {
  if (f.size() != t.size()) throw Error(ErrorKind::GridMismatch, "sample count differs from grid");
  double s = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) s += 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
  return s;
}

std::vector<double> cumulative_integral(const std::vector<double>& t, const std::vector<double>& f) {
  if (f.size() != t.size()) throw Error(ErrorKind::GridMismatch, "sample count differs from grid");
  const int n = static_cast<int>(t.size());
  std::vector<double> out(n, 0.0);
  if (n < 4) {
    for (int i = 1; i < n; ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (f[i] + f[i - 1]);
    return out;
  }
  for (int i = 0; i + 1 < n; ++i) {
    const int start = std::clamp(i - 1, 0, n - 4);
    std::array<double, 4> xs;
    for (int j = 0; j < 4; ++j) xs[j] = t[start + j];
    const double a = t[i], h = t[i + 1] - t[i];
    double s = 0.0;
    for (int g = 0; g < 3; ++g) {
      const auto l = lagrange_values(xs, a + kGaussX[g] * h);
      double val = 0.0;
      for (int j = 0; j < 4; ++j) val += l[j] * f[start + j];
      s += kGaussW[g] * val;
    }
    out[i + 1] = out[i] + s * h;
  }
  return out;
}

double integrate(const std::vector<double>& t, const std::vector<double>& f) { return cumulative_integral(t, f).back(); }

FieldAlongCurve covariant_derivative_along(const MetricField& geometry, const Curve& c, const FieldAlongCurve& f,
                                           DiffOrder order) {
  check_hosted(c, f);
  if (c.segments() < 4) throw Error(ErrorKind::GridTooCoarse, "need at least 4 segments");
  std::vector<Vec> d = f.rates ? *f.rates : differentiate(c.t, f.values, order);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += geometry.christoffel(c.q[i]).contract(c.v[i], f.values[i]);
  return FieldAlongCurve{std::move(d), std::nullopt};
}

double field_integral(const SpacetimeModel& model, const Curve& c, const FieldAlongCurve& f,
                      const FieldAlongCurve& g, const std::vector<double>& weight) {
  check_hosted(c, f);
  check_hosted(c, g);
  if (weight.size() != c.t.size()) throw Error(ErrorKind::GridMismatch, "weight is not hosted on this curve");
  std::vector<double> integrand(c.t.size());
  for (std::size_t i = 0; i < c.t.size(); ++i)
    integrand[i] = weight[i] * f.values[i].dot(model.metric(c.q[i]) * g.values[i]);
  return trapezoid(c.t, integrand);
}

std::pair<Event, Tangent> hermite_eval(const Curve& c, double t) {
  const auto& g = c.t;
  std::size_t i = static_cast<std::size_t>(std::upper_bound(g.begin(), g.end(), t) - g.begin());
  i = std::clamp<std::size_t>(i == 0 ? 0 : i - 1, 0, g.size() - 2);
  const double h = g[i + 1] - g[i];
  const double s = (t - g[i]) / h;
  const double s2 = s * s, s3 = s2 * s;
  const double h00 = 2 * s3 - 3 * s2 + 1, h10 = s3 - 2 * s2 + s, h01 = -2 * s3 + 3 * s2, h11 = s3 - s2;
  const double d00 = 6 * s2 - 6 * s, d10 = 3 * s2 - 4 * s + 1, d01 = -6 * s2 + 6 * s, d11 = 3 * s2 - 2 * s;
  Event q = h00 * c.q[i] + h10 * h * c.v[i] + h01 * c.q[i + 1] + h11 * h * c.v[i + 1];
  Tangent v = (d00 * c.q[i] + d01 * c.q[i + 1]) / h + d10 * c.v[i] + d11 * c.v[i + 1];
  return {q, v};
}

Curve resample_curve(const Curve& c, int N) {
  if (N < 4) throw Error(ErrorKind::GridTooCoarse, "resampling needs N >= 4");
  Curve out;
  out.t = uniform_grid(N);
  out.q.reserve(N + 1);
  out.v.reserve(N + 1);
  for (double t : out.t) {
    auto [q, v] = hermite_eval(c, t);
    out.q.push_back(q);
    out.v.push_back(v);
  }
  return out;
}

Curve reverse_curve(const Curve& c) {
  Curve out;
  const std::size_t n = c.size();
  out.t.resize(n);
  out.q.resize(n);
  out.v.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.t[i] = 1.0 - c.t[n - 1 - i];
    out.q[i] = c.q[n - 1 - i];
    out.v[i] = -c.v[n - 1 - i];
  }
  out.t.front() = 0.0;
  out.t.back() = 1.0;
  return out;
}

FieldAlongCurve reverse_field(const FieldAlongCurve& f) {
  FieldAlongCurve out;
  out.values.assign(f.values.rbegin(), f.values.rend());
  if (f.rates) {
    std::vector<Tangent> r(f.rates->rbegin(), f.rates->rend());
    for (auto& x : r) x = -x;
    out.rates = std::move(r);
  }
  return out;
}

FieldAlongCurve field_from(std::vector<Tangent> values) { return FieldAlongCurve{std::move(values), std::nullopt}; }

}  // namespace brachi
