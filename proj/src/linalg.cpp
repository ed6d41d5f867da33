#include "sandpile/linalg.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

namespace sandpile {

namespace {

template <typename BlockFn>
double blocked_sum(std::size_t n, BlockFn&& block) {
  const std::size_t nblocks = (n + kReductionBlock - 1) / kReductionBlock;
  if (nblocks <= 1) return nblocks == 0 ? 0.0 : block(0, n);
  std::vector<double> partial(nblocks);
  const auto nb = static_cast<std::ptrdiff_t>(nblocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t lo = static_cast<std::size_t>(b) * kReductionBlock;
    partial[static_cast<std::size_t>(b)] = block(lo, std::min(n, lo + kReductionBlock));
  }
  double s = 0.0;
  for (double p : partial) s += p;
  return s;
}

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
  return blocked_sum(a.size(), [&](std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += a[i] * b[i];
    return s;
  });
}

double sum_squares(std::span<const double> a) { return dot(a, a); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpby(std::span<const double> x, double beta, std::span<double> y) {
  const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n > 4096)
  for (std::ptrdiff_t i = 0; i < n; ++i) y[i] = x[i] + beta * y[i];
}

void scale(double alpha, std::span<double> x) {
  for (double& v : x) v *= alpha;
}

void set_num_threads(int n) { omp_set_num_threads(std::max(1, n)); }

int num_threads() { return omp_get_max_threads(); }

}  // namespace sandpile
