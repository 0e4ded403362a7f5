#pragma once

// Data-parallel inner loops. Every kernel has a serial reference in
// kernels::serial with identical results; the OpenMP versions are what the
// library calls. Parallel reductions are arranged so that each output entry is
// summed by exactly one thread in a fixed order, so the two paths agree bit
// for bit.

#include <cstddef>
#include <span>
#include <vector>

namespace dialdiv::kernels {

enum class Reducer { kSumMean, kMeanMean };

/// values: row-major L×H×m×n. Writes L×H reduced entries into `out`.
void reduce_tensor(std::span<const double> values, std::size_t layers, std::size_t heads,
                   std::size_t unit_tokens, std::size_t response_tokens, Reducer reducer,
                   std::span<double> out);

/// Σ_l (1/H) Σ_h reduced[l,h].
double layer_sum_head_mean(std::span<const double> reduced, std::size_t layers, std::size_t heads);

/// Row-major n×n cosine matrix of row-major n×d vectors.
void cosine_matrix(std::span<const double> vectors, std::size_t n, std::size_t dim,
                   std::span<double> out);

/// Mean of the strict upper triangle of cosine_matrix.
double mean_pairwise_cosine(std::span<const double> vectors, std::size_t n, std::size_t dim);

/// For each row of `b` (nb×d), the max cosine to any row of `a` (na×d).
std::vector<double> max_cosine_to_set(std::span<const double> b, std::size_t nb,
                                      std::span<const double> a, std::size_t na, std::size_t dim);

/// Number of OpenMP threads available (1 without OpenMP).
int max_threads();

namespace serial {

void reduce_tensor(std::span<const double> values, std::size_t layers, std::size_t heads,
                   std::size_t unit_tokens, std::size_t response_tokens, Reducer reducer,
                   std::span<double> out);
void cosine_matrix(std::span<const double> vectors, std::size_t n, std::size_t dim,
                   std::span<double> out);
double mean_pairwise_cosine(std::span<const double> vectors, std::size_t n, std::size_t dim);
std::vector<double> max_cosine_to_set(std::span<const double> b, std::size_t nb,
                                      std::span<const double> a, std::size_t na, std::size_t dim);

}  // namespace serial

}  // namespace dialdiv::kernels
