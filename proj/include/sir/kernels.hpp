#pragma once

// Per-query batch kernels. Every query is scored independently against an
// immutable model, so the parallel variants distribute queries over OpenMP
// threads and must agree bitwise with the serial references.

#include <vector>

#include "sir/model.hpp"
#include "sir/standardize.hpp"

namespace sir::kernels {

std::vector<std::vector<double>> score_dataset_serial(const RankerModel& model, const PreparedDataset& ds);
std::vector<std::vector<double>> score_dataset_parallel(const RankerModel& model, const PreparedDataset& ds);

std::vector<double> ndcg_per_query_serial(const RankerModel& model, const PreparedDataset& ds);
std::vector<double> ndcg_per_query_parallel(const RankerModel& model, const PreparedDataset& ds);

/// Fraction of queries whose induced ranking differs between two score sets.
double ranking_change_rate(const std::vector<std::vector<double>>& a, const std::vector<std::vector<double>>& b);

int max_threads();

}  // namespace sir::kernels
