#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace malgroup {

/// One sample's contribution to size clustering.
struct SizePoint {
    std::string sample_id;
    std::uint64_t size_bytes = 0;
};

struct SizeClustering {
    int k = 0;
    bool log_size = false;
    std::vector<double> boundaries;  // k-1 ascending thresholds, raw bytes
    std::unordered_map<std::string, int> assignment;  // sample_id -> cluster 0..k-1
    std::vector<double> centroids;   // per-cluster mean, in the working space
    std::vector<std::size_t> cluster_sizes;
    double sse = 0.0;                // within-cluster SSE, in the working space

    /// Interval-membership routing for new sizes; values beyond the
    /// outermost boundary map to the nearest end cluster.
    int assign_size(std::uint64_t size_bytes) const;
};

struct BicRecord {
    int k = 0;
    double log_likelihood = 0.0;  // Gaussian per-cluster term
    double weight_term = 0.0;     // mixing-proportion term, sum n_j ln(n_j/n)
    double penalty = 0.0;         // lambda * (2k/2) * ln n
    double bic = 0.0;             // log_likelihood + weight_term - penalty
};

struct BicOptions {
    double lambda = 1.0;
};

/// Globally SSE-optimal 1-D k-means via dynamic programming over the
/// sorted sizes. Requires 1 <= k <= number of distinct values.
SizeClustering kmeans_1d_exact(const std::vector<SizePoint>& points, int k,
                               bool log_size = false);

/// Same, keyed by position: assignment keys are decimal indices into `sizes`.
SizeClustering kmeans_1d_exact(const std::vector<std::uint64_t>& sizes, int k,
                               bool log_size = false);

/// BIC of a clustering under a hard-assignment Gaussian model with
/// mixing weights; 2k free parameters in the penalty. Zero-variance
/// clusters are floored at 1e-6 * (global variance + 1).
BicRecord bic_score(const SizeClustering& clustering,
                    const std::vector<SizePoint>& points,
                    const BicOptions& options = {});

struct ChooseKResult {
    SizeClustering clustering;
    std::vector<BicRecord> curve;
};

/// Sweeps k = 1..k_max (clamped to the distinct-value count), scores each
/// optimal clustering, returns the BIC-maximal one (ties -> smaller k).
ChooseKResult choose_k(const std::vector<SizePoint>& points, int k_max = 15,
                       bool log_size = false, const BicOptions& options = {});

std::string clustering_to_json(const SizeClustering& clustering,
                               const std::vector<BicRecord>& curve = {});
SizeClustering clustering_from_json(const std::string& text);

}  // namespace malgroup
