#include "sir/kernels.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "sir/error.hpp"
#include "sir/metrics.hpp"
#include "sir/scoring.hpp"

namespace sir::kernels {

namespace {

// Exceptions may not cross an OpenMP region; the first one is kept and
// rethrown after the loop.
template <typename Body>
void parallel_for(std::size_t n, Body body) {
  std::exception_ptr failure;
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
#pragma omp critical(sir_kernel_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

}  // namespace

std::vector<std::vector<double>> score_dataset_serial(const RankerModel& model, const PreparedDataset& ds) {
  std::vector<std::vector<double>> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = score_query(model, ds[i]);
  return out;
}

std::vector<std::vector<double>> score_dataset_parallel(const RankerModel& model, const PreparedDataset& ds) {
  std::vector<std::vector<double>> out(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) { out[i] = score_query(model, ds[i]); });
  return out;
}

std::vector<double> ndcg_per_query_serial(const RankerModel& model, const PreparedDataset& ds) {
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) out[i] = ndcg(rank(score_query(model, ds[i])), ds[i].labels);
  return out;
}

std::vector<double> ndcg_per_query_parallel(const RankerModel& model, const PreparedDataset& ds) {
  std::vector<double> out(ds.size());
  parallel_for(ds.size(), [&](std::size_t i) { out[i] = ndcg(rank(score_query(model, ds[i])), ds[i].labels); });
  return out;
}

double ranking_change_rate(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b) {
  if (a.size() != b.size()) throw DimensionError("ranking_change_rate: score sets differ in length");
  if (a.empty()) return 0.0;
  std::size_t changed = 0;
  for (std::size_t i = 0; i < a.size(); ++i) changed += !(rank(a[i]).order == rank(b[i]).order);
  return static_cast<double>(changed) / static_cast<double>(a.size());
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace sir::kernels
