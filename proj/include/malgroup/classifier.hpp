#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace malgroup {

struct LabeledVector {
    std::vector<double> values;
    int label = 0;  // 1 = malware, 0 = benign
};

enum class LeafKind { distribution, naive_bayes };

/// Per-class Gaussian naive Bayes fitted at a leaf. The Gaussian terms
/// are present only when both classes occur at the leaf; otherwise the
/// posterior is the smoothed prior alone.
struct NaiveBayesLeaf {
    double prior_malware = 0.5;  // Laplace-smoothed
    bool has_gaussians = false;
    std::vector<double> mean_malware, var_malware;
    std::vector<double> mean_benign, var_benign;
};

struct TreeNode {
    // Internal node when left and right are set.
    int feature_index = -1;
    double threshold = 0.0;
    std::unique_ptr<TreeNode> left, right;

    // Leaf payload.
    std::uint64_t n_malware = 0, n_benign = 0;
    double malware_frac = 0.0;
    std::optional<NaiveBayesLeaf> nb;

    bool is_leaf() const { return !left; }
    std::size_t node_count() const;
    std::size_t depth() const;
};

using TreePtr = std::unique_ptr<TreeNode>;

struct TreeParams {
    int min_leaf = 2;
    int max_depth = 25;
    LeafKind leaf_kind = LeafKind::distribution;
};

struct ForestParams {
    int trees = 100;
    int features_per_split = 0;  // 0 -> ceil(sqrt(F))
    std::uint64_t seed = 0;
    bool bootstrap = true;
    TreeParams tree;
};

struct ForestModel {
    std::vector<TreePtr> trees;
    ForestParams params;
};

struct Prediction {
    int label = 0;       // 1 = malware
    double score = 0.0;  // malware posterior in [0, 1]
};

/// C4.5-style recursive binary splitting on numeric features: candidate
/// thresholds are midpoints between consecutive distinct values, the
/// split maximizes gain ratio (ties: lowest feature index, then lowest
/// threshold), recursion stops at purity, min_leaf, max_depth, or when no
/// split has positive gain. leaf_kind selects plain class distributions
/// or Gaussian naive Bayes leaves (the NBT configuration).
TreePtr train_tree(const std::vector<LabeledVector>& data, const TreeParams& params = {});

/// Bagged random-subspace forest; tree t uses rng seed `seed + t`, a
/// bootstrap resample of the data, and a fresh random feature subset at
/// every split. Deterministic given the seed.
ForestModel train_forest(const std::vector<LabeledVector>& data, const ForestParams& params = {});

Prediction predict(const TreeNode& tree, const std::vector<double>& x);
Prediction predict(const ForestModel& forest, const std::vector<double>& x);

std::string tree_to_json(const TreeNode& tree);
TreePtr tree_from_json(const std::string& text);
std::string forest_to_json(const ForestModel& forest);
ForestModel forest_from_json(const std::string& text);

}  // namespace malgroup
