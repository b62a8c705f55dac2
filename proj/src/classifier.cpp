#include "malgroup/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace malgroup {

namespace {

double entropy_bits(std::uint64_t a, std::uint64_t b) {
    double n = static_cast<double>(a + b);
    if (a == 0 || b == 0) return 0.0;
    double pa = static_cast<double>(a) / n;
    double pb = static_cast<double>(b) / n;
    return -pa * std::log2(pa) - pb * std::log2(pb);
}

constexpr double kGainEps = 1e-12;
constexpr double kVarFloor = 1e-9;

void fit_leaf(TreeNode& node, const std::vector<LabeledVector>& data,
              const std::vector<std::size_t>& idx, LeafKind kind) {
    for (std::size_t i : idx) {
        if (data[i].label == 1) ++node.n_malware; else ++node.n_benign;
    }
    std::uint64_t n = node.n_malware + node.n_benign;
    node.malware_frac = static_cast<double>(node.n_malware) / static_cast<double>(n);
    if (kind != LeafKind::naive_bayes) return;

    NaiveBayesLeaf nb;
    nb.prior_malware = (static_cast<double>(node.n_malware) + 1.0) / (static_cast<double>(n) + 2.0);
    if (node.n_malware > 0 && node.n_benign > 0) {
        nb.has_gaussians = true;
        std::size_t f = data[idx.front()].values.size();
        nb.mean_malware.assign(f, 0.0);
        nb.var_malware.assign(f, 0.0);
        nb.mean_benign.assign(f, 0.0);
        nb.var_benign.assign(f, 0.0);
        for (std::size_t i : idx) {
            auto& mean = data[i].label == 1 ? nb.mean_malware : nb.mean_benign;
            for (std::size_t j = 0; j < f; ++j) mean[j] += data[i].values[j];
        }
        for (std::size_t j = 0; j < f; ++j) {
            nb.mean_malware[j] /= static_cast<double>(node.n_malware);
            nb.mean_benign[j] /= static_cast<double>(node.n_benign);
        }
        for (std::size_t i : idx) {
            auto& mean = data[i].label == 1 ? nb.mean_malware : nb.mean_benign;
            auto& var = data[i].label == 1 ? nb.var_malware : nb.var_benign;
            for (std::size_t j = 0; j < f; ++j) {
                double d = data[i].values[j] - mean[j];
                var[j] += d * d;
            }
        }
        for (std::size_t j = 0; j < f; ++j) {
            nb.var_malware[j] = std::max(nb.var_malware[j] / static_cast<double>(node.n_malware), kVarFloor);
            nb.var_benign[j] = std::max(nb.var_benign[j] / static_cast<double>(node.n_benign), kVarFloor);
        }
    }
    node.nb = std::move(nb);
}

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain_ratio = 0.0;
};

SplitChoice best_split(const std::vector<LabeledVector>& data, const std::vector<std::size_t>& idx,
                       const std::vector<int>& features, int min_leaf) {
    SplitChoice best;
    std::uint64_t total_m = 0, total_b = 0;
    for (std::size_t i : idx) {
        if (data[i].label == 1) ++total_m; else ++total_b;
    }
    double parent_entropy = entropy_bits(total_m, total_b);
    if (parent_entropy == 0.0) return best;
    double n = static_cast<double>(idx.size());

    std::vector<std::pair<double, int>> column(idx.size());
    for (int f : features) {
        for (std::size_t i = 0; i < idx.size(); ++i) {
            column[i] = {data[idx[i]].values[static_cast<std::size_t>(f)], data[idx[i]].label};
        }
        std::sort(column.begin(), column.end());

        std::uint64_t left_m = 0, left_b = 0;
        for (std::size_t i = 0; i + 1 < column.size(); ++i) {
            if (column[i].second == 1) ++left_m; else ++left_b;
            if (column[i].first == column[i + 1].first) continue;
            std::uint64_t left_n = left_m + left_b;
            std::uint64_t right_n = column.size() - left_n;
            if (left_n < static_cast<std::uint64_t>(min_leaf) ||
                right_n < static_cast<std::uint64_t>(min_leaf)) {
                continue;
            }
            double threshold = column[i].first + (column[i + 1].first - column[i].first) / 2.0;
            double pl = static_cast<double>(left_n) / n;
            double pr = static_cast<double>(right_n) / n;
            double gain = parent_entropy - pl * entropy_bits(left_m, left_b) -
                          pr * entropy_bits(total_m - left_m, total_b - left_b);
            if (gain <= kGainEps) continue;
            double split_info = -pl * std::log2(pl) - pr * std::log2(pr);
            double ratio = gain / split_info;
            if (ratio > best.gain_ratio) {  // features ascending, thresholds
                best.found = true;          // ascending: first max wins ties
                best.feature = f;
                best.threshold = threshold;
                best.gain_ratio = ratio;
            }
        }
    }
    return best;
}

TreePtr grow(const std::vector<LabeledVector>& data, std::vector<std::size_t> idx,
             const TreeParams& params, int depth, std::mt19937_64* rng, int features_per_split) {
    auto node = std::make_unique<TreeNode>();
    const int f_total = static_cast<int>(data[idx.front()].values.size());

    bool pure = std::all_of(idx.begin(), idx.end(),
                            [&](std::size_t i) { return data[i].label == data[idx.front()].label; });
    if (!pure && depth < params.max_depth &&
        idx.size() >= 2 * static_cast<std::size_t>(params.min_leaf)) {
        std::vector<int> features(static_cast<std::size_t>(f_total));
        std::iota(features.begin(), features.end(), 0);
        if (rng && features_per_split < f_total) {
            // Partial Fisher-Yates draw, then sorted for the ascending
            // tie-break order.
            for (int i = 0; i < features_per_split; ++i) {
                std::uniform_int_distribution<int> pick(i, f_total - 1);
                std::swap(features[static_cast<std::size_t>(i)],
                          features[static_cast<std::size_t>(pick(*rng))]);
            }
            features.resize(static_cast<std::size_t>(features_per_split));
            std::sort(features.begin(), features.end());
        }
        SplitChoice split = best_split(data, idx, features, params.min_leaf);
        if (split.found) {
            std::vector<std::size_t> left_idx, right_idx;
            for (std::size_t i : idx) {
                if (data[i].values[static_cast<std::size_t>(split.feature)] <= split.threshold) {
                    left_idx.push_back(i);
                } else {
                    right_idx.push_back(i);
                }
            }
            node->feature_index = split.feature;
            node->threshold = split.threshold;
            node->left = grow(data, std::move(left_idx), params, depth + 1, rng, features_per_split);
            node->right = grow(data, std::move(right_idx), params, depth + 1, rng, features_per_split);
            return node;
        }
    }
    fit_leaf(*node, data, idx, params.leaf_kind);
    return node;
}

void check_data(const std::vector<LabeledVector>& data) {
    if (data.empty()) throw std::invalid_argument("empty training data");
    std::size_t f = data.front().values.size();
    for (const LabeledVector& row : data) {
        if (row.values.size() != f) {
            throw std::invalid_argument("inconsistent feature vector lengths");
        }
    }
}

}  // namespace

std::size_t TreeNode::node_count() const {
    return is_leaf() ? 1 : 1 + left->node_count() + right->node_count();
}

std::size_t TreeNode::depth() const {
    return is_leaf() ? 0 : 1 + std::max(left->depth(), right->depth());
}

TreePtr train_tree(const std::vector<LabeledVector>& data, const TreeParams& params) {
    check_data(data);
    std::vector<std::size_t> idx(data.size());
    std::iota(idx.begin(), idx.end(), 0);
    return grow(data, std::move(idx), params, 0, nullptr, 0);
}

ForestModel train_forest(const std::vector<LabeledVector>& data, const ForestParams& params) {
    check_data(data);
    if (params.trees <= 0) throw std::invalid_argument("forest needs at least one tree");
    const int f_total = static_cast<int>(data.front().values.size());

    ForestModel model;
    model.params = params;
    if (model.params.features_per_split <= 0) {
        model.params.features_per_split =
            static_cast<int>(std::ceil(std::sqrt(static_cast<double>(f_total))));
    }
    model.params.features_per_split = std::min(model.params.features_per_split, f_total);

    model.trees.reserve(static_cast<std::size_t>(params.trees));
    for (int t = 0; t < params.trees; ++t) {
        std::mt19937_64 rng(params.seed + static_cast<std::uint64_t>(t));
        std::vector<std::size_t> idx(data.size());
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick(0, data.size() - 1);
            for (std::size_t& i : idx) i = pick(rng);
        } else {
            std::iota(idx.begin(), idx.end(), 0);
        }
        model.trees.push_back(grow(data, std::move(idx), params.tree, 0, &rng,
                                   model.params.features_per_split));
    }
    return model;
}

namespace {

double malware_score(const TreeNode& tree, const std::vector<double>& x) {
    const TreeNode* node = &tree;
    while (!node->is_leaf()) {
        node = x[static_cast<std::size_t>(node->feature_index)] <= node->threshold
                   ? node->left.get()
                   : node->right.get();
    }
    if (node->nb) {
        const NaiveBayesLeaf& nb = *node->nb;
        if (!nb.has_gaussians) return nb.prior_malware;
        double log_m = std::log(nb.prior_malware);
        double log_b = std::log(1.0 - nb.prior_malware);
        for (std::size_t j = 0; j < nb.mean_malware.size(); ++j) {
            double dm = x[j] - nb.mean_malware[j];
            double db = x[j] - nb.mean_benign[j];
            log_m += -0.5 * std::log(2.0 * M_PI * nb.var_malware[j]) - dm * dm / (2.0 * nb.var_malware[j]);
            log_b += -0.5 * std::log(2.0 * M_PI * nb.var_benign[j]) - db * db / (2.0 * nb.var_benign[j]);
        }
        double hi = std::max(log_m, log_b);
        double zm = std::exp(log_m - hi);
        double zb = std::exp(log_b - hi);
        return zm / (zm + zb);
    }
    return node->malware_frac;
}

int max_feature_index(const TreeNode& node) {
    if (node.is_leaf()) return -1;
    return std::max(node.feature_index,
                    std::max(max_feature_index(*node.left), max_feature_index(*node.right)));
}

}  // namespace

Prediction predict(const TreeNode& tree, const std::vector<double>& x) {
    if (static_cast<int>(x.size()) <= max_feature_index(tree)) {
        throw std::invalid_argument("feature vector shorter than the model expects");
    }
    double score = malware_score(tree, x);
    return Prediction{score > 0.5 ? 1 : 0, score};
}

Prediction predict(const ForestModel& forest, const std::vector<double>& x) {
    if (forest.trees.empty()) throw std::invalid_argument("empty forest");
    double total = 0.0;
    for (const TreePtr& tree : forest.trees) {
        if (static_cast<int>(x.size()) <= max_feature_index(*tree)) {
            throw std::invalid_argument("feature vector shorter than the model expects");
        }
        total += malware_score(*tree, x);
    }
    double score = total / static_cast<double>(forest.trees.size());
    return Prediction{score > 0.5 ? 1 : 0, score};
}

namespace {

json node_to_json(const TreeNode& node) {
    if (!node.is_leaf()) {
        return json{{"feature", node.feature_index},
                    {"threshold", node.threshold},
                    {"left", node_to_json(*node.left)},
                    {"right", node_to_json(*node.right)}};
    }
    json j{{"n_malware", node.n_malware},
           {"n_benign", node.n_benign},
           {"malware_frac", node.malware_frac}};
    if (node.nb) {
        json nb{{"prior_malware", node.nb->prior_malware},
                {"has_gaussians", node.nb->has_gaussians}};
        if (node.nb->has_gaussians) {
            nb["mean_malware"] = node.nb->mean_malware;
            nb["var_malware"] = node.nb->var_malware;
            nb["mean_benign"] = node.nb->mean_benign;
            nb["var_benign"] = node.nb->var_benign;
        }
        j["nb"] = std::move(nb);
    }
    return j;
}

TreePtr node_from_json(const json& j) {
    auto node = std::make_unique<TreeNode>();
    if (j.contains("feature")) {
        node->feature_index = j.at("feature").get<int>();
        node->threshold = j.at("threshold").get<double>();
        node->left = node_from_json(j.at("left"));
        node->right = node_from_json(j.at("right"));
        return node;
    }
    node->n_malware = j.at("n_malware").get<std::uint64_t>();
    node->n_benign = j.at("n_benign").get<std::uint64_t>();
    node->malware_frac = j.at("malware_frac").get<double>();
    if (j.contains("nb")) {
        const json& jb = j.at("nb");
        NaiveBayesLeaf nb;
        nb.prior_malware = jb.at("prior_malware").get<double>();
        nb.has_gaussians = jb.at("has_gaussians").get<bool>();
        if (nb.has_gaussians) {
            nb.mean_malware = jb.at("mean_malware").get<std::vector<double>>();
            nb.var_malware = jb.at("var_malware").get<std::vector<double>>();
            nb.mean_benign = jb.at("mean_benign").get<std::vector<double>>();
            nb.var_benign = jb.at("var_benign").get<std::vector<double>>();
        }
        node->nb = std::move(nb);
    }
    return node;
}

json forest_to_json_obj(const ForestModel& forest) {
    json trees = json::array();
    for (const TreePtr& tree : forest.trees) trees.push_back(node_to_json(*tree));
    return json{{"trees", std::move(trees)},
                {"trees_count", forest.params.trees},
                {"features_per_split", forest.params.features_per_split},
                {"seed", forest.params.seed},
                {"bootstrap", forest.params.bootstrap}};
}

ForestModel forest_from_json_obj(const json& j) {
    ForestModel model;
    model.params.trees = j.at("trees_count").get<int>();
    model.params.features_per_split = j.at("features_per_split").get<int>();
    model.params.seed = j.at("seed").get<std::uint64_t>();
    model.params.bootstrap = j.at("bootstrap").get<bool>();
    for (const json& jt : j.at("trees")) model.trees.push_back(node_from_json(jt));
    return model;
}

}  // namespace

std::string tree_to_json(const TreeNode& tree) { return node_to_json(tree).dump(); }

TreePtr tree_from_json(const std::string& text) { return node_from_json(json::parse(text)); }

std::string forest_to_json(const ForestModel& forest) { return forest_to_json_obj(forest).dump(); }

ForestModel forest_from_json(const std::string& text) {
    return forest_from_json_obj(json::parse(text));
}

namespace detail {
json tree_json_obj(const TreeNode& tree) { return node_to_json(tree); }
TreePtr tree_from_json_obj(const json& j) { return node_from_json(j); }
json forest_json_obj(const ForestModel& forest) { return forest_to_json_obj(forest); }
ForestModel forest_from_obj(const json& j) { return forest_from_json_obj(j); }
}  // namespace detail

}  // namespace malgroup
