#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "anonbench/common.hpp"

namespace anonbench {

/// 1 - cos(a, b), in [0, 2]. Throws on dimension mismatch or zero-norm input.
double cosine_distance(const Embedding& a, const Embedding& b);

double euclidean_distance(const Embedding& a, const Embedding& b);

enum class DistanceMetric { kCosine, kEuclidean };

double distance(DistanceMetric metric, const Embedding& a, const Embedding& b);
const char* metric_name(DistanceMetric metric);
DistanceMetric parse_metric(const std::string& name);

/// Arithmetic mean of a non-empty set of same-dimension embeddings.
Embedding mean_embedding(std::span<const Embedding> points);

struct ClusterResult {
  std::vector<Embedding> centroids;
  std::vector<std::size_t> assignments;
  double inertia = 0.0;
  // Inertia after each assignment step; non-increasing.
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding. Empty clusters are repaired by
/// moving in the point farthest from its assigned centroid.
ClusterResult kmeans(std::span<const Embedding> points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iters = 300);

/// Gender-stratified target selection: per_gender K-Means clusters in each
/// gender sub-pool, returning the real pool member nearest each centroid.
/// Output: female targets first, then male, each in cluster order.
std::vector<PoolEntry> select_targets(const Pool& pool, std::size_t per_gender,
                                      std::uint64_t seed);

}  // namespace anonbench
