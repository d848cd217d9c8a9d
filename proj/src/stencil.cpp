#include "herglotz/stencil.hpp"

#include <algorithm>
#include <cassert>
#include <stdexcept>

namespace herglotz {

std::vector<double> fd_weights(double x0, std::span<const double> xs, int k) {
  // B. Fornberg, Math. Comp. 51 (1988) 699-706
  const int nn = (int)xs.size();
  if (nn <= k) throw std::invalid_argument("fd_weights: not enough nodes for derivative order");
  std::vector<double> C((size_t)nn * (k + 1), 0.0);
  auto c = [&](int i, int j) -> double& { return C[(size_t)i * (k + 1) + j]; };
  double c1 = 1.0;
  double c4 = xs[0] - x0;
  c(0, 0) = 1.0;
  for (int i = 1; i < nn; ++i) {
    int mn = std::min(i, k);
    double c2 = 1.0;
    double c5 = c4;
    c4 = xs[i] - x0;
    for (int j = 0; j < i; ++j) {
      double c3 = xs[i] - xs[j];
      c2 *= c3;
      if (j == i - 1) {
        for (int s = mn; s >= 1; --s)
          c(i, s) = c1 * (s * c(i - 1, s - 1) - c5 * c(i - 1, s)) / c2;
        c(i, 0) = -c1 * c5 * c(i - 1, 0) / c2;
      }
      for (int s = mn; s >= 1; --s) c(j, s) = (c4 * c(j, s) - s * c(j, s - 1)) / c3;
      c(j, 0) = c4 * c(j, 0) / c3;
    }
    c1 = c2;
  }
  std::vector<double> w(nn);
  for (int i = 0; i < nn; ++i) w[i] = c(i, k);
  return w;
}

namespace {

// integer-offset weights, cached per (k, window size, position)
std::vector<double> uniform_weights(int k, int first_offset, int npoints) {
  std::vector<double> xs(npoints);
  for (int i = 0; i < npoints; ++i) xs[i] = (double)(first_offset + i);
  return fd_weights(0.0, xs, k);
}

struct Window {
  int first;  // first series index of the window
  int count;
};

Window pick_window(int len, int k, int i, int sided_points) {
  const int half = (k + 1) / 2 + 1;           // central half-width
  const int central = 2 * half + 1;           // interior point count
  const int sided = sided_points > k ? sided_points : k + 2;
  if (len >= central && i >= half && i <= len - 1 - half) return {i - half, central};
  if (i < half) return {0, std::min(sided, len)};
  return {len - std::min(sided, len), std::min(sided, len)};
}

}  // namespace

double series_derivative_at(std::span<const double> v, double h, int k, int i,
                            int sided_points) {
  const int len = (int)v.size();
  if (len < k + 2) throw std::invalid_argument("series_derivative: series too short");
  if (k == 0) return v[i];
  Window w = pick_window(len, k, i, sided_points);
  std::vector<double> weights = uniform_weights(k, w.first - i, w.count);
  double acc = 0.0;
  for (int j = 0; j < w.count; ++j) acc += weights[j] * v[w.first + j];
  double hk = 1.0;
  for (int j = 0; j < k; ++j) hk *= h;
  return acc / hk;
}

std::vector<double> series_derivative(std::span<const double> v, double h, int k,
                                      int sided_points) {
  const int len = (int)v.size();
  if (len < k + 2) throw std::invalid_argument("series_derivative: series too short");
  std::vector<double> out(len);
  if (k == 0) {
    std::copy(v.begin(), v.end(), out.begin());
    return out;
  }
  double hk = 1.0;
  for (int j = 0; j < k; ++j) hk *= h;
  // reuse weights: interior windows share one stencil
  const int half = (k + 1) / 2 + 1;
  const int central = 2 * half + 1;
  std::vector<double> wc;
  if (len >= central) wc = uniform_weights(k, -half, central);
  for (int i = 0; i < len; ++i) {
    Window w = pick_window(len, k, i, sided_points);
    double acc = 0.0;
    if (w.count == central && w.first == i - half) {
      for (int j = 0; j < central; ++j) acc += wc[j] * v[w.first + j];
    } else {
      std::vector<double> weights = uniform_weights(k, w.first - i, w.count);
      for (int j = 0; j < w.count; ++j) acc += weights[j] * v[w.first + j];
    }
    out[i] = acc / hk;
  }
  return out;
}

std::vector<double> tail_integrals(std::span<const double> v, double h) {
  const int len = (int)v.size();
  if (len < 4) throw std::invalid_argument("tail_integrals: need at least 4 nodes");
  std::vector<double> out(len, 0.0);
  // single-interval cubic rule over [i, i+1]
  auto interval = [&](int i) -> double {
    if (i + 3 <= len - 1)
      return h / 24.0 * (9.0 * v[i] + 19.0 * v[i + 1] - 5.0 * v[i + 2] + v[i + 3]);
    return h / 24.0 * (v[i - 2] - 5.0 * v[i - 1] + 19.0 * v[i] + 9.0 * v[i + 1]);
  };
  out[len - 1] = 0.0;
  if (len >= 2) out[len - 2] = interval(len - 2);
  for (int i = len - 3; i >= 0; --i) {
    int intervals = len - 1 - i;
    if (intervals % 2 == 0)
      out[i] = out[i + 2] + h / 3.0 * (v[i] + 4.0 * v[i + 1] + v[i + 2]);
    else
      out[i] = out[i + 1] + interval(i);
  }
  return out;
}

}  // namespace herglotz
