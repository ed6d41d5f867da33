#pragma once

#include <cstddef>
#include <span>

namespace sandpile {

/// Reductions are computed over fixed blocks of this many entries and the block
/// partials are summed serially, so the bits do not depend on the thread count.
inline constexpr std::size_t kReductionBlock = 2048;

double dot(std::span<const double> a, std::span<const double> b);
double sum_squares(std::span<const double> a);
double norm_inf(std::span<const double> a);

/// y += alpha * x
void axpy(double alpha, std::span<const double> x, std::span<double> y);
/// y = x + beta * y
void xpby(std::span<const double> x, double beta, std::span<double> y);
void scale(double alpha, std::span<double> x);

void set_num_threads(int n);
int num_threads();

}  // namespace sandpile
