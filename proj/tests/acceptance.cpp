// End-to-end acceptance suite. Each check prints one PASS/FAIL line; the
// exit code is the number of failed checks.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "malgroup/classifier.hpp"
#include "malgroup/cluster.hpp"
#include "malgroup/corpus.hpp"
#include "malgroup/features.hpp"
#include "malgroup/pipeline.hpp"
#include "malgroup/synth.hpp"
#include "oracles.hpp"

using namespace malgroup;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(const std::string& name, bool ok, double seconds, const std::string& detail = "") {
    std::printf("[%s] %-38s (%.2fs)%s%s\n", ok ? "PASS" : "FAIL", name.c_str(), seconds,
                detail.empty() ? "" : " ", detail.c_str());
    if (!ok) ++g_failures;
}

Corpus corpus_from_samples(const std::vector<SynthSample>& samples) {
    std::vector<std::string> mnemonics;
    for (const SynthSample& s : samples) {
        mnemonics.insert(mnemonics.end(), s.tokens.begin(), s.tokens.end());
    }
    Corpus corpus;
    corpus.vocab = OpcodeVocab(std::move(mnemonics));
    for (const SynthSample& s : samples) {
        Sample sample;
        sample.id = s.rel_path;
        sample.label = s.label;
        sample.size_bytes = s.size_bytes;
        for (const std::string& token : s.tokens) ++sample.counts[corpus.vocab.id_of(token)];
        corpus.samples.push_back(std::move(sample));
    }
    return corpus;
}

std::vector<SizePoint> size_points(const Corpus& corpus) {
    std::vector<SizePoint> points;
    for (const Sample& s : corpus.samples) points.push_back(SizePoint{s.id, s.size_bytes});
    return points;
}

// 1. Feature selection agrees with the brute-force reference on 200
//    random small corpora.
void feature_selection_oracle() {
    auto start = Clock::now();
    std::mt19937_64 rng(101);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::size_t v = rng() % 7 + 2;   // <= 8 opcodes
        std::size_t n = rng() % 5 + 2;   // <= 6 samples
        std::vector<Sample> samples;
        std::vector<oracle::TinySample> tiny;
        for (std::size_t i = 0; i < n; ++i) {
            bool malware = i == 0 || (i != 1 && rng() % 2 == 0);
            Sample s;
            s.id = std::to_string(i);
            s.label = malware ? Label::malware : Label::benign;
            oracle::TinySample t;
            t.malware = malware;
            t.counts.assign(v, 0);
            for (std::size_t o = 0; o < v; ++o) {
                std::uint64_t c = rng() % 6;
                if (c > 0) {
                    s.counts[static_cast<int>(o) + 1] = c;
                    t.counts[o] = c;
                }
            }
            samples.push_back(std::move(s));
            tiny.push_back(std::move(t));
        }
        std::vector<const Sample*> ptrs;
        for (const Sample& s : samples) ptrs.push_back(&s);
        auto ranking = select_features(ptrs, static_cast<int>(v), static_cast<int>(v));
        auto expected_d = oracle::feature_scores(tiny, v);
        auto expected_sel = oracle::top_n(expected_d, v);
        for (std::size_t o = 0; o < v; ++o) {
            if (std::fabs(ranking.d[o] - expected_d[o]) > 1e-12) ok = false;
        }
        if (ranking.selected != expected_sel) ok = false;
        if (!ok) detail = "mismatch at trial " + std::to_string(trial);
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds >= 10.0) {
        ok = false;
        detail += " (over time budget)";
    }
    report("feature-selection oracle equivalence", ok, seconds, detail);
}

// 2. Exact clustering SSE equals exhaustive contiguous-partition search.
void clustering_oracle() {
    auto start = Clock::now();
    std::mt19937_64 rng(103);
    bool ok = true;
    std::string detail;
    for (int trial = 0; trial < 200 && ok; ++trial) {
        std::size_t n = rng() % 9 + 2;  // <= 10
        std::vector<std::uint64_t> sizes(n);
        for (auto& s : sizes) s = rng() % 2000;
        std::vector<double> sorted(sizes.begin(), sizes.end());
        std::sort(sorted.begin(), sorted.end());
        std::vector<double> dedup = sorted;
        dedup.erase(std::unique(dedup.begin(), dedup.end()), dedup.end());
        int max_k = static_cast<int>(std::min<std::size_t>(4, dedup.size()));
        for (int k = 1; k <= max_k; ++k) {
            double got = kmeans_1d_exact(sizes, k).sse;
            double expected = oracle::best_contiguous_sse(sorted, k);
            double scale = std::max(1.0, std::fabs(expected));
            if (std::fabs(got - expected) > 1e-9 * scale) {
                ok = false;
                detail = "trial " + std::to_string(trial) + " k=" + std::to_string(k);
            }
        }
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds >= 10.0) {
        ok = false;
        detail += " (over time budget)";
    }
    report("exact-clustering oracle", ok, seconds, detail);
}

// 3. choose_k recovers the planted family count on the shipped scenario.
void planted_k_recovery() {
    auto start = Clock::now();
    auto specs = default_scenario();
    std::size_t planted = specs.size();
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        auto samples = generate_samples(specs, seed);
        std::vector<SizePoint> points;
        for (const SynthSample& s : samples) points.push_back(SizePoint{s.rel_path, s.size_bytes});
        if (choose_k(points, 15).clustering.k == static_cast<int>(planted)) ++hits;
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    bool ok = hits >= 18 && seconds < 60.0;
    report("planted-K recovery", ok, seconds, std::to_string(hits) + "/20 runs recovered K=" +
                                                  std::to_string(planted));
}

// 4. Full pipeline on the shipped scenario: NBT >= 95%, tree/forest >= 90%.
void end_to_end_detection() {
    auto start = Clock::now();
    auto samples = generate_samples(default_scenario(), 7);
    Corpus corpus = corpus_from_samples(samples);
    auto clustering = choose_k(size_points(corpus), 15).clustering;
    SplitPlan plan = split(clustering, corpus, 0.15, 7);

    bool ok = corpus.samples.size() >= 500;
    std::string detail;
    struct Target {
        ClassifierKind kind;
        double floor;
    };
    for (Target target : {Target{ClassifierKind::nbt, 95.0}, Target{ClassifierKind::tree, 90.0},
                          Target{ClassifierKind::forest, 90.0}}) {
        PipelineParams params;
        params.kind = target.kind;
        params.n_features = 20;
        params.seed = 7;
        auto pipeline = train_pipeline(corpus, clustering, plan, params);
        auto eval = evaluate(pipeline, plan, corpus);
        double acc = eval.pooled.accuracy_percent();
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s=%.2f%% ", to_string(target.kind), acc);
        detail += buf;
        if (acc < target.floor) ok = false;
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    if (seconds >= 300.0) ok = false;
    report("end-to-end detection", ok, seconds, detail);
}

// 5. Accuracy identity with zero tolerance, on fixed counts and on every
//    row of a real sweep report.
void accuracy_exactness() {
    auto start = Clock::now();
    bool ok = true;
    ConfusionCounts fixed;
    fixed.tp = 3;
    fixed.tn = 1;
    fixed.fn = 1;
    if (fixed.tm() != 4 || fixed.tb() != 1 || fixed.accuracy_percent() != 80.0) ok = false;

    auto samples = generate_samples(default_scenario(), 11);
    Corpus corpus = corpus_from_samples(samples);
    auto clustering = choose_k(size_points(corpus), 15).clustering;
    auto report_obj = sweep(corpus, clustering, {ClassifierKind::nbt, ClassifierKind::tree},
                            {10, 20}, 0.15, 11);
    for (const SweepRow& row : report_obj.rows) {
        if (row.counts.tm() != row.counts.tp + row.counts.fn) ok = false;
        if (row.counts.tb() != row.counts.tn + row.counts.fp) ok = false;
        std::uint64_t total = row.counts.tm() + row.counts.tb();
        if (total > 0 &&
            row.counts.accuracy_percent() !=
                100.0 * static_cast<double>(row.counts.tp + row.counts.tn) /
                    static_cast<double>(total)) {
            ok = false;
        }
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report("accuracy identity (zero tolerance)", ok, seconds);
}

// 6. Split rule on 50 random clusterings.
void split_rule() {
    auto start = Clock::now();
    std::mt19937_64 rng(107);
    bool ok = true;
    for (int trial = 0; trial < 50 && ok; ++trial) {
        // Random corpus of 40-160 samples over 1-5 synthetic clusters.
        int k = static_cast<int>(rng() % 5 + 1);
        Corpus corpus;
        corpus.vocab = OpcodeVocab({"mov"});
        SizeClustering clustering;
        clustering.k = k;
        for (int c = 0; c < k; ++c) {
            int per_class = static_cast<int>(rng() % 16 + 1);
            for (int label = 0; label < 2; ++label) {
                for (int i = 0; i < per_class; ++i) {
                    Sample s;
                    s.id = std::to_string(c) + "/" + std::to_string(label) + "/" +
                           std::to_string(i);
                    s.label = label == 1 ? Label::malware : Label::benign;
                    s.size_bytes = static_cast<std::uint64_t>(c + 1) * 1000;
                    s.counts[1] = 1;
                    clustering.assignment[s.id] = c;
                    corpus.samples.push_back(std::move(s));
                }
            }
        }
        SplitPlan plan = split(clustering, corpus, 0.15, rng());

        std::set<std::string> seen;
        for (int c = 0; c < k; ++c) {
            std::size_t cluster_total = 0, test_total = plan.test[static_cast<std::size_t>(c)].size();
            std::size_t malware_total = 0;
            for (const auto& [id, cc] : clustering.assignment) {
                if (cc == c) ++cluster_total;
            }
            for (const Sample& s : corpus.samples) {
                if (clustering.assignment.at(s.id) == c && s.label == Label::malware) {
                    ++malware_total;
                }
            }
            std::size_t benign_total = cluster_total - malware_total;
            for (const auto& id : plan.train[static_cast<std::size_t>(c)]) {
                if (!seen.insert(id).second) ok = false;
            }
            for (const auto& id : plan.test[static_cast<std::size_t>(c)]) {
                if (!seen.insert(id).second) ok = false;
            }
            if (plan.train[static_cast<std::size_t>(c)].size() + test_total != cluster_total) {
                ok = false;
            }
            if (malware_total >= 7 && benign_total >= 7) {
                double share = static_cast<double>(test_total) / static_cast<double>(cluster_total);
                if (share < 0.15) ok = false;
            }
        }
        if (seen.size() != corpus.samples.size()) ok = false;
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report("split rule (stratified 15%, partition)", ok, seconds);
}

// 7. Byte-identical sweep CSV across two runs with the same inputs.
void sweep_determinism() {
    auto start = Clock::now();
    auto samples = generate_samples(default_scenario(), 13);
    Corpus corpus = corpus_from_samples(samples);
    auto clustering = choose_k(size_points(corpus), 15).clustering;
    std::vector<ClassifierKind> kinds{ClassifierKind::nbt, ClassifierKind::tree,
                                      ClassifierKind::forest};
    auto a = sweep(corpus, clustering, kinds, {20, 40}, 0.15, 17);
    auto b = sweep(corpus, clustering, kinds, {20, 40}, 0.15, 17);
    bool ok = a.to_csv() == b.to_csv() && !a.rows.empty();
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report("sweep determinism (byte-identical CSV)", ok, seconds);
}

// 8. Serialize -> deserialize -> predict agrees exactly on 1000 vectors.
void model_round_trip() {
    auto start = Clock::now();
    std::mt19937_64 rng(109);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<LabeledVector> data;
    for (int i = 0; i < 120; ++i) {
        LabeledVector row;
        row.label = static_cast<int>(rng() % 2);
        for (int j = 0; j < 8; ++j) row.values.push_back(uni(rng) + 0.25 * row.label);
        data.push_back(std::move(row));
    }

    TreeParams nbt_params;
    nbt_params.leaf_kind = LeafKind::naive_bayes;
    auto tree = train_tree(data, nbt_params);
    auto tree_restored = tree_from_json(tree_to_json(*tree));

    ForestParams forest_params;
    forest_params.trees = 20;
    forest_params.seed = 19;
    auto forest = train_forest(data, forest_params);
    auto forest_restored = forest_from_json(forest_to_json(forest));

    bool ok = true;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> x;
        for (int j = 0; j < 8; ++j) x.push_back(uni(rng) * 1.5);
        auto pt = predict(*tree, x);
        auto pr = predict(*tree_restored, x);
        if (pt.label != pr.label || pt.score != pr.score) ok = false;
        auto ft = predict(forest, x);
        auto fr = predict(forest_restored, x);
        if (ft.label != fr.label || ft.score != fr.score) ok = false;
    }
    double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    report("model serialization round trip", ok, seconds);
}

}  // namespace

int main() {
    feature_selection_oracle();
    clustering_oracle();
    planted_k_recovery();
    end_to_end_detection();
    accuracy_exactness();
    split_rule();
    sweep_determinism();
    model_round_trip();
    if (g_failures == 0) {
        std::printf("all acceptance checks passed\n");
    } else {
        std::printf("%d acceptance check(s) FAILED\n", g_failures);
    }
    return g_failures;
}
