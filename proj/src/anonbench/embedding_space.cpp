#include "anonbench/embedding_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "anonbench/rng.hpp"

namespace anonbench {
namespace {

void check_same_dim(const Embedding& a, const Embedding& b) {
  require(a.dim() == b.dim(), ErrorCode::kDimensionMismatch,
          "embedding dimensions differ: " + std::to_string(a.dim()) + " vs " +
              std::to_string(b.dim()));
}

double squared_distance(const Embedding& a, const Embedding& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    sum += d * d;
  }
  return sum;
}

std::size_t nearest_centroid(const Embedding& p, const std::vector<Embedding>& centroids,
                             double* best_sq) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double d = squared_distance(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  *best_sq = best_d;
  return best;
}

std::vector<Embedding> kmeanspp_init(std::span<const Embedding> points, std::size_t k,
                                     Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Embedding> centroids;
  centroids.reserve(k);
  std::vector<bool> chosen(n, false);
  std::size_t first = rng.below(n);
  centroids.push_back(points[first]);
  chosen[first] = true;

  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centroids[0]);

  while (centroids.size() < k) {
    const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && acc > target) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left the target beyond the accumulated sum.
        for (std::size_t i = n; i-- > 0;)
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
      }
    } else {
      // Every remaining point coincides with a centroid.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i)
        if (!chosen[i]) free.push_back(i);
      pick = free[rng.below(free.size())];
    }
    chosen[pick] = true;
    centroids.push_back(points[pick]);
    for (std::size_t i = 0; i < n; ++i)
      d2[i] = std::min(d2[i], squared_distance(points[i], centroids.back()));
  }
  return centroids;
}

}  // namespace

double cosine_distance(const Embedding& a, const Embedding& b) {
  check_same_dim(a, b);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  require(na > 0.0 && nb > 0.0, ErrorCode::kInvalidArgument,
          "cosine distance undefined for zero-norm embedding");
  const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(1.0 - cos, 0.0, 2.0);
}

double euclidean_distance(const Embedding& a, const Embedding& b) {
  check_same_dim(a, b);
  return std::sqrt(squared_distance(a, b));
}

double distance(DistanceMetric metric, const Embedding& a, const Embedding& b) {
  return metric == DistanceMetric::kCosine ? cosine_distance(a, b) : euclidean_distance(a, b);
}

const char* metric_name(DistanceMetric metric) {
  return metric == DistanceMetric::kCosine ? "cosine" : "euclidean";
}

DistanceMetric parse_metric(const std::string& name) {
  if (name == "cosine") return DistanceMetric::kCosine;
  if (name == "euclidean") return DistanceMetric::kEuclidean;
  fail(ErrorCode::kConfig, "unknown distance metric '" + name + "'");
}

Embedding mean_embedding(std::span<const Embedding> points) {
  require(!points.empty(), ErrorCode::kInvalidArgument, "mean of empty embedding set");
  Embedding mean = Embedding::zeros(points.front().dim());
  for (const auto& p : points) {
    check_same_dim(mean, p);
    for (std::size_t i = 0; i < p.dim(); ++i) mean[i] += p[i];
  }
  const double inv = 1.0 / static_cast<double>(points.size());
  for (std::size_t i = 0; i < mean.dim(); ++i) mean[i] *= inv;
  return mean;
}

ClusterResult kmeans(std::span<const Embedding> points, std::size_t k, std::uint64_t seed,
                     std::size_t max_iters) {
  require(k >= 1, ErrorCode::kInvalidArgument, "kmeans requires k >= 1");
  require(!points.empty(), ErrorCode::kInvalidArgument, "kmeans requires points");
  require(k <= points.size(), ErrorCode::kInvalidArgument,
          "kmeans k=" + std::to_string(k) + " exceeds point count " +
              std::to_string(points.size()));
  require(max_iters >= 1, ErrorCode::kInvalidArgument, "kmeans requires max_iters >= 1");
  for (const auto& p : points) check_same_dim(points.front(), p);

  const std::size_t n = points.size();
  Rng rng(seed);
  ClusterResult result;
  result.centroids = kmeanspp_init(points, k, rng);
  result.assignments.assign(n, k);  // k marks "unassigned"

  std::vector<std::size_t> assign(n);
  std::vector<double> dist_sq(n);
  bool converged = false;
  for (std::size_t iter = 0; iter < max_iters; ++iter) {
    for (std::size_t i = 0; i < n; ++i)
      assign[i] = nearest_centroid(points[i], result.centroids, &dist_sq[i]);

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t c : assign) ++counts[c];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (counts[assign[i]] < 2) continue;
        if (far == n || dist_sq[i] > dist_sq[far]) far = i;
      }
      --counts[assign[far]];
      assign[far] = c;
      counts[c] = 1;
      dist_sq[far] = 0.0;
      result.centroids[c] = points[far];
    }

    const double inertia = std::accumulate(dist_sq.begin(), dist_sq.end(), 0.0);
    result.inertia_history.push_back(inertia);
    result.iterations = iter + 1;
    if (assign == result.assignments) {
      converged = true;
      break;
    }
    result.assignments = assign;

    std::vector<Embedding> sums(k, Embedding::zeros(points.front().dim()));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < points[i].dim(); ++d) sums[assign[i]][d] += points[i][d];
    for (std::size_t c = 0; c < k; ++c) {
      const double inv = 1.0 / static_cast<double>(counts[c]);
      for (std::size_t d = 0; d < sums[c].dim(); ++d) sums[c][d] *= inv;
      result.centroids[c] = std::move(sums[c]);
    }
  }

  if (converged) {
    result.inertia = result.inertia_history.back();
  } else {
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      inertia += squared_distance(points[i], result.centroids[result.assignments[i]]);
    result.inertia = inertia;
  }
  return result;
}

std::vector<PoolEntry> select_targets(const Pool& pool, std::size_t per_gender,
                                      std::uint64_t seed) {
  require(per_gender >= 1, ErrorCode::kInvalidArgument, "per_gender must be >= 1");
  validate_pool(pool);

  std::vector<PoolEntry> targets;
  targets.reserve(2 * per_gender);
  for (Gender gender : {Gender::kFemale, Gender::kMale}) {
    std::vector<const PoolEntry*> sub;
    for (const auto& e : pool)
      if (e.gender == gender) sub.push_back(&e);
    require(sub.size() >= per_gender, ErrorCode::kInvalidArgument,
            std::string("pool has ") + std::to_string(sub.size()) + " " + gender_name(gender) +
                " speakers, need " + std::to_string(per_gender));
    std::sort(sub.begin(), sub.end(),
              [](const PoolEntry* a, const PoolEntry* b) { return a->speaker_id < b->speaker_id; });

    std::vector<Embedding> points;
    points.reserve(sub.size());
    for (const auto* e : sub) points.push_back(e->xvector);
    const ClusterResult clusters =
        kmeans(points, per_gender, derive_seed(seed, gender_name(gender)));

    std::vector<bool> used(sub.size(), false);
    for (const auto& centroid : clusters.centroids) {
      std::size_t best = sub.size();
      double best_d = std::numeric_limits<double>::infinity();
      // sub is sorted by id, so strict < keeps the lowest id on ties.
      for (std::size_t i = 0; i < sub.size(); ++i) {
        if (used[i]) continue;
        const double d = euclidean_distance(sub[i]->xvector, centroid);
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
      used[best] = true;
      targets.push_back(*sub[best]);
    }
  }
  return targets;
}

}  // namespace anonbench
