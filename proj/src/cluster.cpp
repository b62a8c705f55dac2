#include "malgroup/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

using nlohmann::json;

namespace malgroup {

namespace {

double working_value(std::uint64_t size_bytes, bool log_size) {
    double v = static_cast<double>(size_bytes);
    return log_size ? std::log(std::max(v, 1.0)) : v;
}

double from_working(double v, bool log_size) {
    return log_size ? std::exp(v) : v;
}

struct DpResult {
    std::vector<std::size_t> starts;  // start index of each cluster in sorted order
    std::vector<double> centroids;
    double sse = 0.0;
};

// Exact DP over sorted values; interval cost from prefix sums.
DpResult kmeans_dp(const std::vector<double>& v, int k) {
    const std::size_t n = v.size();
    std::vector<double> s(n + 1, 0.0), s2(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s[i + 1] = s[i] + v[i];
        s2[i + 1] = s2[i] + v[i] * v[i];
    }
    auto cost = [&](std::size_t a, std::size_t b) {  // [a, b)
        double len = static_cast<double>(b - a);
        double sum = s[b] - s[a];
        return std::max(0.0, (s2[b] - s2[a]) - sum * sum / len);
    };

    const double inf = std::numeric_limits<double>::infinity();
    // dp[c][i]: optimal cost of the first i points in c clusters.
    std::vector<std::vector<double>> dp(static_cast<std::size_t>(k) + 1,
                                        std::vector<double>(n + 1, inf));
    std::vector<std::vector<std::size_t>> arg(dp.size(), std::vector<std::size_t>(n + 1, 0));
    dp[0][0] = 0.0;
    for (int c = 1; c <= k; ++c) {
        for (std::size_t i = static_cast<std::size_t>(c); i <= n; ++i) {
            for (std::size_t j = static_cast<std::size_t>(c) - 1; j < i; ++j) {
                if (dp[c - 1][j] == inf) continue;
                double total = dp[c - 1][j] + cost(j, i);
                if (total < dp[c][i]) {
                    dp[c][i] = total;
                    arg[c][i] = j;
                }
            }
        }
    }

    DpResult result;
    result.sse = dp[static_cast<std::size_t>(k)][n];
    result.starts.resize(static_cast<std::size_t>(k));
    std::size_t end = n;
    for (int c = k; c >= 1; --c) {
        std::size_t start = arg[static_cast<std::size_t>(c)][end];
        result.starts[static_cast<std::size_t>(c) - 1] = start;
        end = start;
    }
    result.centroids.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::size_t a = result.starts[static_cast<std::size_t>(c)];
        std::size_t b = c + 1 < k ? result.starts[static_cast<std::size_t>(c) + 1] : n;
        result.centroids[static_cast<std::size_t>(c)] = (s[b] - s[a]) / static_cast<double>(b - a);
    }
    return result;
}

}  // namespace

int SizeClustering::assign_size(std::uint64_t size_bytes) const {
    double v = static_cast<double>(size_bytes);
    int c = 0;
    while (c < static_cast<int>(boundaries.size()) && v > boundaries[static_cast<std::size_t>(c)]) {
        ++c;
    }
    return c;
}

SizeClustering kmeans_1d_exact(const std::vector<SizePoint>& points, int k, bool log_size) {
    if (points.empty()) throw std::invalid_argument("no sizes to cluster");
    if (k <= 0) throw std::invalid_argument("k must be positive");

    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].size_bytes != points[b].size_bytes) {
            return points[a].size_bytes < points[b].size_bytes;
        }
        return points[a].sample_id < points[b].sample_id;
    });

    std::vector<double> values(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        values[i] = working_value(points[order[i]].size_bytes, log_size);
    }

    std::size_t distinct = 0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i == 0 || values[i] != values[i - 1]) ++distinct;
    }
    if (static_cast<std::size_t>(k) > distinct) {
        throw std::invalid_argument("k too large: " + std::to_string(k) + " clusters for " +
                                    std::to_string(distinct) + " distinct size(s)");
    }

    DpResult dp = kmeans_dp(values, k);

    SizeClustering clustering;
    clustering.k = k;
    clustering.log_size = log_size;
    clustering.sse = dp.sse;
    clustering.centroids = dp.centroids;
    clustering.cluster_sizes.resize(static_cast<std::size_t>(k));
    for (int c = 0; c < k; ++c) {
        std::size_t a = dp.starts[static_cast<std::size_t>(c)];
        std::size_t b = c + 1 < k ? dp.starts[static_cast<std::size_t>(c) + 1] : values.size();
        clustering.cluster_sizes[static_cast<std::size_t>(c)] = b - a;
        for (std::size_t i = a; i < b; ++i) {
            clustering.assignment[points[order[i]].sample_id] = c;
        }
        if (c + 1 < k) {
            double hi = static_cast<double>(points[order[b - 1]].size_bytes);
            double lo = static_cast<double>(points[order[b]].size_bytes);
            if (log_size) {
                clustering.boundaries.push_back(from_working(
                    (working_value(points[order[b - 1]].size_bytes, true) +
                     working_value(points[order[b]].size_bytes, true)) / 2.0, true));
            } else {
                clustering.boundaries.push_back((hi + lo) / 2.0);
            }
        }
    }
    return clustering;
}

SizeClustering kmeans_1d_exact(const std::vector<std::uint64_t>& sizes, int k, bool log_size) {
    std::vector<SizePoint> points;
    points.reserve(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        points.push_back(SizePoint{std::to_string(i), sizes[i]});
    }
    return kmeans_1d_exact(points, k, log_size);
}

BicRecord bic_score(const SizeClustering& clustering, const std::vector<SizePoint>& points,
                    const BicOptions& options) {
    const std::size_t n = points.size();
    if (n == 0) throw std::invalid_argument("no points");
    const int k = clustering.k;

    std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
    std::vector<double> sum2(static_cast<std::size_t>(k), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(k), 0);
    double gsum = 0.0, gsum2 = 0.0;
    for (const SizePoint& p : points) {
        double v = working_value(p.size_bytes, clustering.log_size);
        auto it = clustering.assignment.find(p.sample_id);
        if (it == clustering.assignment.end()) {
            throw std::invalid_argument("point not in clustering: " + p.sample_id);
        }
        std::size_t c = static_cast<std::size_t>(it->second);
        sum[c] += v;
        sum2[c] += v * v;
        ++count[c];
        gsum += v;
        gsum2 += v * v;
    }

    double global_var = std::max(0.0, gsum2 / static_cast<double>(n) -
                                          (gsum / static_cast<double>(n)) * (gsum / static_cast<double>(n)));
    double floor = 1e-6 * (global_var + 1.0);

    BicRecord record;
    record.k = k;
    for (int c = 0; c < k; ++c) {
        std::size_t idx = static_cast<std::size_t>(c);
        double nj = static_cast<double>(count[idx]);
        if (nj == 0.0) throw std::invalid_argument("empty cluster in BIC scoring");
        double mean = sum[idx] / nj;
        double var = std::max(std::max(0.0, sum2[idx] / nj - mean * mean), floor);
        record.log_likelihood += -(nj / 2.0) * std::log(2.0 * M_PI * var) - nj / 2.0;
        record.weight_term += nj * std::log(nj / static_cast<double>(n));
    }
    record.penalty = options.lambda * static_cast<double>(k) * std::log(static_cast<double>(n));
    record.bic = record.log_likelihood + record.weight_term - record.penalty;
    return record;
}

ChooseKResult choose_k(const std::vector<SizePoint>& points, int k_max, bool log_size,
                       const BicOptions& options) {
    if (points.empty()) throw std::invalid_argument("no sizes to cluster");
    if (k_max <= 0) throw std::invalid_argument("k_max must be positive");

    std::vector<double> values;
    values.reserve(points.size());
    for (const SizePoint& p : points) values.push_back(working_value(p.size_bytes, log_size));
    std::sort(values.begin(), values.end());
    int distinct = static_cast<int>(std::unique(values.begin(), values.end()) - values.begin());
    k_max = std::min(k_max, distinct);

    ChooseKResult result;
    double best = -std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        SizeClustering clustering = kmeans_1d_exact(points, k, log_size);
        BicRecord record = bic_score(clustering, points, options);
        result.curve.push_back(record);
        if (record.bic > best) {  // strict: ties keep the smaller k
            best = record.bic;
            result.clustering = std::move(clustering);
        }
    }
    return result;
}

std::string clustering_to_json(const SizeClustering& clustering,
                               const std::vector<BicRecord>& curve) {
    json j{{"k", clustering.k},
           {"log_size", clustering.log_size},
           {"boundaries", clustering.boundaries},
           {"centroids", clustering.centroids},
           {"cluster_sizes", clustering.cluster_sizes},
           {"sse", clustering.sse}};
    json assignment = json::object();
    for (const auto& [id, c] : clustering.assignment) assignment[id] = c;
    j["assignment"] = std::move(assignment);
    if (!curve.empty()) {
        json records = json::array();
        for (const BicRecord& r : curve) {
            records.push_back({{"k", r.k},
                               {"log_likelihood", r.log_likelihood},
                               {"weight_term", r.weight_term},
                               {"penalty", r.penalty},
                               {"bic", r.bic}});
        }
        j["bic_curve"] = std::move(records);
    }
    return j.dump(2);
}

SizeClustering clustering_from_json(const std::string& text) {
    json j = json::parse(text);
    SizeClustering clustering;
    clustering.k = j.at("k").get<int>();
    clustering.log_size = j.at("log_size").get<bool>();
    clustering.boundaries = j.at("boundaries").get<std::vector<double>>();
    clustering.centroids = j.at("centroids").get<std::vector<double>>();
    clustering.cluster_sizes = j.at("cluster_sizes").get<std::vector<std::size_t>>();
    clustering.sse = j.at("sse").get<double>();
    for (const auto& [id, c] : j.at("assignment").items()) {
        clustering.assignment[id] = c.get<int>();
    }
    return clustering;
}

}  // namespace malgroup
