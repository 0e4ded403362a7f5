#include "dialdiv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace dialdiv::kernels {
namespace {

// Extended-precision accumulation, rounded to double once at the end.
inline double reduce_one(const double* block, std::size_t m, std::size_t n, Reducer reducer) {
  long double s = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    const double* row = block + i * n;
    for (std::size_t j = 0; j < n; ++j) s += row[j];
  }
  const long double denom = reducer == Reducer::kSumMean
                                ? static_cast<long double>(n)
                                : static_cast<long double>(m) * static_cast<long double>(n);
  return static_cast<double>(s / denom);
}

inline double dot(const double* x, const double* y, std::size_t d) {
  double s = 0.0;
  for (std::size_t k = 0; k < d; ++k) s += x[k] * y[k];
  return s;
}

inline double cosine(const double* x, const double* y, std::size_t d) {
  double nx = std::sqrt(dot(x, x, d));
  double ny = std::sqrt(dot(y, y, d));
  if (nx == 0.0 || ny == 0.0) return 0.0;
  return dot(x, y, d) / (nx * ny);
}

}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void reduce_tensor(std::span<const double> values, std::size_t layers, std::size_t heads,
                   std::size_t unit_tokens, std::size_t response_tokens, Reducer reducer,
                   std::span<double> out) {
  const std::size_t block = unit_tokens * response_tokens;
  const auto cells = static_cast<std::ptrdiff_t>(layers * heads);
#pragma omp parallel for schedule(static) if (cells * static_cast<std::ptrdiff_t>(block) > 65536)
  for (std::ptrdiff_t c = 0; c < cells; ++c)
    out[static_cast<std::size_t>(c)] =
        reduce_one(values.data() + static_cast<std::size_t>(c) * block, unit_tokens,
                   response_tokens, reducer);
}

double layer_sum_head_mean(std::span<const double> reduced, std::size_t layers, std::size_t heads) {
  double total = 0.0;
  for (std::size_t l = 0; l < layers; ++l) {
    double s = 0.0;
    for (std::size_t h = 0; h < heads; ++h) s += reduced[l * heads + h];
    total += s / static_cast<double>(heads);
  }
  return total;
}

void cosine_matrix(std::span<const double> vectors, std::size_t n, std::size_t dim,
                   std::span<double> out) {
  const auto rows = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) if (n * n * dim > 65536)
  for (std::ptrdiff_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[static_cast<std::size_t>(i) * n + j] =
          cosine(vectors.data() + static_cast<std::size_t>(i) * dim, vectors.data() + j * dim, dim);
}

double mean_pairwise_cosine(std::span<const double> vectors, std::size_t n, std::size_t dim) {
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> m(n * n);
  cosine_matrix(vectors, n, dim, m);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += m[i * n + j];
  return s / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::vector<double> max_cosine_to_set(std::span<const double> b, std::size_t nb,
                                      std::span<const double> a, std::size_t na, std::size_t dim) {
  std::vector<double> out(nb, -std::numeric_limits<double>::infinity());
  const auto rows = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(dynamic) if (nb * na * dim > 65536)
  for (std::ptrdiff_t i = 0; i < rows; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < na; ++j)
      best = std::max(best, cosine(b.data() + static_cast<std::size_t>(i) * dim,
                                   a.data() + j * dim, dim));
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

namespace serial {

void reduce_tensor(std::span<const double> values, std::size_t layers, std::size_t heads,
                   std::size_t unit_tokens, std::size_t response_tokens, Reducer reducer,
                   std::span<double> out) {
  const std::size_t block = unit_tokens * response_tokens;
  for (std::size_t c = 0; c < layers * heads; ++c)
    out[c] = reduce_one(values.data() + c * block, unit_tokens, response_tokens, reducer);
}

void cosine_matrix(std::span<const double> vectors, std::size_t n, std::size_t dim,
                   std::span<double> out) {
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      out[i * n + j] = cosine(vectors.data() + i * dim, vectors.data() + j * dim, dim);
}

double mean_pairwise_cosine(std::span<const double> vectors, std::size_t n, std::size_t dim) {
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      s += cosine(vectors.data() + i * dim, vectors.data() + j * dim, dim);
  return s / (static_cast<double>(n) * static_cast<double>(n - 1) / 2.0);
}

std::vector<double> max_cosine_to_set(std::span<const double> b, std::size_t nb,
                                      std::span<const double> a, std::size_t na, std::size_t dim) {
  std::vector<double> out(nb);
  for (std::size_t i = 0; i < nb; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < na; ++j)
      best = std::max(best, cosine(b.data() + i * dim, a.data() + j * dim, dim));
    out[i] = best;
  }
  return out;
}

}  // namespace serial
}  // namespace dialdiv::kernels
