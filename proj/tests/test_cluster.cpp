#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "malgroup/cluster.hpp"
#include "oracles.hpp"

using namespace malgroup;

TEST_CASE("two separated triples split cleanly") {
    auto clustering = kmeans_1d_exact(std::vector<std::uint64_t>{10, 11, 12, 100, 101, 102}, 2);
    CHECK(clustering.sse == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(clustering.centroids[0] == doctest::Approx(11.0));
    CHECK(clustering.centroids[1] == doctest::Approx(101.0));
    CHECK(clustering.assignment.at("0") == 0);
    CHECK(clustering.assignment.at("2") == 0);
    CHECK(clustering.assignment.at("3") == 1);
    CHECK(clustering.assignment.at("5") == 1);
    REQUIRE(clustering.boundaries.size() == 1);
    CHECK(clustering.boundaries[0] == doctest::Approx(56.0));
}

TEST_CASE("identical points collapse to one cluster") {
    auto clustering = kmeans_1d_exact(std::vector<std::uint64_t>{5, 5, 5}, 1);
    CHECK(clustering.sse == 0.0);
    CHECK(clustering.centroids == std::vector<double>{5.0});
}

TEST_CASE("k equal to n gives singleton clusters with zero sse") {
    auto clustering = kmeans_1d_exact(std::vector<std::uint64_t>{3, 9, 27, 81}, 4);
    CHECK(clustering.sse == 0.0);
    for (std::size_t n : clustering.cluster_sizes) CHECK(n == 1);
}

TEST_CASE("invalid k is rejected") {
    CHECK_THROWS_AS(kmeans_1d_exact(std::vector<std::uint64_t>{1, 1, 2}, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(kmeans_1d_exact(std::vector<std::uint64_t>{1, 2}, 0), std::invalid_argument);
}

TEST_CASE("dp matches exhaustive contiguous partition search") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 60; ++trial) {
        std::size_t n = rng() % 9 + 2;
        std::vector<std::uint64_t> sizes(n);
        for (auto& s : sizes) s = rng() % 1000;
        std::vector<double> sorted(sizes.begin(), sizes.end());
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> dedup = sorted;
        dedup.erase(std::unique(dedup.begin(), dedup.end()), dedup.end());
        int max_k = static_cast<int>(std::min<std::size_t>(4, dedup.size()));
        for (int k = 1; k <= max_k; ++k) {
            auto clustering = kmeans_1d_exact(sizes, k);
            double expected = oracle::best_contiguous_sse(sorted, k);
            CHECK(clustering.sse ==
                  doctest::Approx(expected).epsilon(1e-9).scale(std::max(1.0, expected)));
        }
    }
}

TEST_CASE("clusters are contiguous in size order") {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<SizePoint> points;
        for (int i = 0; i < 12; ++i) {
            points.push_back(SizePoint{std::to_string(i), rng() % 500});
        }
        auto clustering = kmeans_1d_exact(points, 3);
        std::sort(points.begin(), points.end(), [](const SizePoint& a, const SizePoint& b) {
            return a.size_bytes < b.size_bytes;
        });
        int last = 0;
        for (const SizePoint& p : points) {
            int c = clustering.assignment.at(p.sample_id);
            CHECK(c >= last);
            last = c;
        }
        CHECK(std::is_sorted(clustering.centroids.begin(), clustering.centroids.end()));
    }
}

TEST_CASE("optimal sse is non-increasing in k") {
    std::vector<std::uint64_t> sizes{4, 8, 15, 16, 23, 42, 99, 100, 108};
    double last = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= 5; ++k) {
        auto clustering = kmeans_1d_exact(sizes, k);
        CHECK(clustering.sse <= last + 1e-9);
        last = clustering.sse;
    }
}

TEST_CASE("input order does not matter") {
    std::vector<SizePoint> points;
    std::mt19937_64 rng(41);
    for (int i = 0; i < 10; ++i) points.push_back(SizePoint{std::to_string(i), rng() % 300});
    auto base = kmeans_1d_exact(points, 3);
    std::shuffle(points.begin(), points.end(), rng);
    auto shuffled = kmeans_1d_exact(points, 3);
    CHECK(base.sse == shuffled.sse);
    CHECK(base.centroids == shuffled.centroids);
    for (const auto& [id, c] : base.assignment) CHECK(shuffled.assignment.at(id) == c);
}

namespace {

std::vector<SizePoint> as_points(const std::vector<std::uint64_t>& sizes) {
    std::vector<SizePoint> points;
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        points.push_back(SizePoint{std::to_string(i), sizes[i]});
    }
    return points;
}

// Direct recomputation of the scoring formula from sample statistics.
double bic_oracle(const std::vector<std::vector<double>>& clusters, double lambda) {
    std::size_t n = 0;
    double gsum = 0.0, gsum2 = 0.0;
    for (const auto& members : clusters) {
        n += members.size();
        for (double v : members) {
            gsum += v;
            gsum2 += v * v;
        }
    }
    double gmean = gsum / static_cast<double>(n);
    double floor = 1e-6 * ((gsum2 / static_cast<double>(n) - gmean * gmean) + 1.0);
    double score = 0.0;
    for (const auto& members : clusters) {
        double nj = static_cast<double>(members.size());
        double mean = 0.0;
        for (double v : members) mean += v;
        mean /= nj;
        double var = 0.0;
        for (double v : members) var += (v - mean) * (v - mean);
        var = std::max(var / nj, floor);
        score += -(nj / 2.0) * std::log(2.0 * M_PI * var) - nj / 2.0;
        score += nj * std::log(nj / static_cast<double>(n));
    }
    return score - lambda * static_cast<double>(clusters.size()) * std::log(static_cast<double>(n));
}

}  // namespace

TEST_CASE("bic handles degenerate variance via the floor") {
    auto points = as_points({7, 7, 7, 7});
    auto clustering = kmeans_1d_exact(points, 1);
    auto record = bic_score(clustering, points);
    CHECK(std::isfinite(record.bic));
}

TEST_CASE("bic prefers two clusters for two separated blobs") {
    std::mt19937_64 rng(43);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::uint64_t> sizes;
    std::vector<std::vector<double>> blob_a, blob_b;
    blob_a.emplace_back();
    blob_b.emplace_back();
    for (int i = 0; i < 50; ++i) {
        double a = 100.0 + noise(rng);
        double b = 1100.0 + noise(rng);
        sizes.push_back(static_cast<std::uint64_t>(std::llround(a)));
        sizes.push_back(static_cast<std::uint64_t>(std::llround(b)));
    }
    auto points = as_points(sizes);
    auto k1 = bic_score(kmeans_1d_exact(points, 1), points);
    auto c2 = kmeans_1d_exact(points, 2);
    auto k2 = bic_score(c2, points);
    CHECK(k2.bic > k1.bic);

    // Cross-check against the direct formula.
    std::vector<std::vector<double>> groups(2);
    for (const auto& p : points) {
        groups[static_cast<std::size_t>(c2.assignment.at(p.sample_id))].push_back(
            static_cast<double>(p.size_bytes));
    }
    CHECK(k2.bic == doctest::Approx(bic_oracle(groups, 1.0)).epsilon(1e-9));
}

TEST_CASE("singleton clustering penalty equals k ln n") {
    std::vector<std::uint64_t> sizes{10, 20, 30, 40, 50, 60, 70, 80, 90, 100};
    auto points = as_points(sizes);
    auto record = bic_score(kmeans_1d_exact(points, 10), points);
    CHECK(record.penalty == doctest::Approx(10.0 * std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("gaussian likelihood term is non-decreasing in k") {
    std::mt19937_64 rng(47);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<std::uint64_t> sizes;
        for (int i = 0; i < 40; ++i) sizes.push_back(rng() % 100000);
        auto points = as_points(sizes);
        auto result = choose_k(points, 8);
        for (std::size_t i = 1; i < result.curve.size(); ++i) {
            CHECK(result.curve[i].log_likelihood >= result.curve[i - 1].log_likelihood - 1e-6);
        }
    }
}

TEST_CASE("choose_k on identical sizes returns one cluster") {
    auto points = as_points({64, 64, 64, 64});
    auto result = choose_k(points, 15);
    CHECK(result.clustering.k == 1);
}

TEST_CASE("choose_k recovers three planted size families") {
    std::mt19937_64 rng(53);
    std::vector<std::uint64_t> sizes;
    for (double mean : {20000.0, 60000.0, 200000.0}) {
        std::normal_distribution<double> dist(mean, 500.0);
        for (int i = 0; i < 40; ++i) {
            sizes.push_back(static_cast<std::uint64_t>(std::llround(dist(rng))));
        }
    }
    auto result = choose_k(as_points(sizes), 15);
    CHECK(result.clustering.k == 3);
}

TEST_CASE("log-size clustering keeps boundaries in raw bytes") {
    auto points = as_points({100, 110, 120, 100000, 110000, 120000});
    auto clustering = kmeans_1d_exact(points, 2, /*log_size=*/true);
    REQUIRE(clustering.boundaries.size() == 1);
    CHECK(clustering.boundaries[0] > 120.0);
    CHECK(clustering.boundaries[0] < 100000.0);
    CHECK(clustering.assign_size(50) == 0);
    CHECK(clustering.assign_size(500000) == 1);
}
