#include "malgroup/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "classifier_json.hpp"

using nlohmann::json;

namespace malgroup {

const char* to_string(ClassifierKind kind) {
    switch (kind) {
        case ClassifierKind::tree: return "tree";
        case ClassifierKind::forest: return "forest";
        case ClassifierKind::nbt: return "nbt";
    }
    return "nbt";
}

ClassifierKind classifier_kind_from_string(const std::string& s) {
    if (s == "tree") return ClassifierKind::tree;
    if (s == "forest") return ClassifierKind::forest;
    if (s == "nbt") return ClassifierKind::nbt;
    throw std::invalid_argument("unknown classifier: " + s);
}

namespace {

std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::unordered_map<std::string, const Sample*> index_samples(const Corpus& corpus) {
    std::unordered_map<std::string, const Sample*> index;
    index.reserve(corpus.samples.size());
    for (const Sample& s : corpus.samples) index.emplace(s.id, &s);
    return index;
}

}  // namespace

SplitPlan split(const SizeClustering& clustering, const Corpus& corpus, double test_fraction,
                std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test fraction must lie in (0, 1)");
    }
    SplitPlan plan;
    plan.test_fraction = test_fraction;
    plan.seed = seed;
    plan.train.resize(static_cast<std::size_t>(clustering.k));
    plan.test.resize(static_cast<std::size_t>(clustering.k));

    // Cluster members by class, in sorted-id order for determinism.
    std::vector<std::array<std::vector<std::string>, 2>> members(
        static_cast<std::size_t>(clustering.k));
    for (const Sample& s : corpus.samples) {
        auto it = clustering.assignment.find(s.id);
        if (it == clustering.assignment.end()) {
            throw std::invalid_argument("sample not in clustering: " + s.id);
        }
        members[static_cast<std::size_t>(it->second)][static_cast<std::size_t>(s.label)]
            .push_back(s.id);
    }

    for (int c = 0; c < clustering.k; ++c) {
        for (int label = 0; label < 2; ++label) {
            auto& ids = members[static_cast<std::size_t>(c)][static_cast<std::size_t>(label)];
            std::sort(ids.begin(), ids.end());
            std::size_t n = ids.size();
            std::size_t n_test = 0;
            if (n >= 2) {
                n_test = static_cast<std::size_t>(
                    std::ceil(test_fraction * static_cast<double>(n)));
            } else if (n == 1) {
                plan.warnings.push_back("cluster " + std::to_string(c) + ": lone " +
                                        (label == 1 ? "malware" : "benign") +
                                        " sample kept for training");
            }
            std::mt19937_64 rng(mix64(seed ^ mix64(static_cast<std::uint64_t>(c) * 2 +
                                                   static_cast<std::uint64_t>(label) + 1)));
            std::shuffle(ids.begin(), ids.end(), rng);
            for (std::size_t i = 0; i < n; ++i) {
                (i < n_test ? plan.test : plan.train)[static_cast<std::size_t>(c)]
                    .push_back(ids[i]);
            }
        }
        std::sort(plan.train[static_cast<std::size_t>(c)].begin(),
                  plan.train[static_cast<std::size_t>(c)].end());
        std::sort(plan.test[static_cast<std::size_t>(c)].begin(),
                  plan.test[static_cast<std::size_t>(c)].end());
        if (plan.test[static_cast<std::size_t>(c)].empty()) {
            plan.warnings.push_back("cluster " + std::to_string(c) + ": empty test split");
        }
    }
    return plan;
}

std::vector<double> featurize(const Sample& sample, const std::vector<int>& feature_set,
                              int vocab_size) {
    std::vector<double> dense = normalize_sample(sample, vocab_size);
    std::vector<double> out;
    out.reserve(feature_set.size());
    for (int id : feature_set) out.push_back(dense[static_cast<std::size_t>(id) - 1]);
    return out;
}

Prediction GroupModel::predict_vector(const std::vector<double>& x) const {
    if (constant) {
        return Prediction{constant_label, constant_label == 1 ? 1.0 : 0.0};
    }
    if (kind == ClassifierKind::forest) return predict(forest, x);
    return predict(*tree, x);
}

TrainedPipeline train_pipeline(const Corpus& corpus, const SizeClustering& clustering,
                               const SplitPlan& plan, const PipelineParams& params,
                               std::vector<std::string>* warnings) {
    if (params.n_features <= 0) throw std::invalid_argument("feature count must be positive");
    auto index = index_samples(corpus);

    TrainedPipeline pipeline;
    pipeline.vocab = corpus.vocab;
    pipeline.clustering = clustering;
    pipeline.params = params;

    for (int c = 0; c < clustering.k; ++c) {
        std::vector<const Sample*> train_samples;
        for (const std::string& id : plan.train[static_cast<std::size_t>(c)]) {
            auto it = index.find(id);
            if (it == index.end()) throw std::invalid_argument("unknown sample id: " + id);
            train_samples.push_back(it->second);
        }
        if (train_samples.empty()) {
            throw std::invalid_argument("cluster " + std::to_string(c) + " has no training samples");
        }

        GroupModel group;
        group.cluster_index = c;
        group.kind = params.kind;

        bool has_malware = std::any_of(train_samples.begin(), train_samples.end(),
                                       [](const Sample* s) { return s->label == Label::malware; });
        bool has_benign = std::any_of(train_samples.begin(), train_samples.end(),
                                      [](const Sample* s) { return s->label == Label::benign; });
        if (!has_malware || !has_benign) {
            group.constant = true;
            group.constant_label = has_malware ? 1 : 0;
            if (warnings) {
                warnings->push_back("cluster " + std::to_string(c) +
                                    ": single-class training data, constant model");
            }
            pipeline.groups.push_back(std::move(group));
            continue;
        }

        FeatureRanking ranking =
            select_features(train_samples, corpus.vocab.size(), params.n_features, params.norm);
        if (ranking.clamped && warnings) {
            warnings->push_back("cluster " + std::to_string(c) + ": feature count clamped to " +
                                std::to_string(corpus.vocab.size()));
        }
        group.feature_set = ranking.selected;

        std::vector<LabeledVector> rows;
        rows.reserve(train_samples.size());
        for (const Sample* s : train_samples) {
            rows.push_back(LabeledVector{featurize(*s, group.feature_set, corpus.vocab.size()),
                                         s->label == Label::malware ? 1 : 0});
        }

        switch (params.kind) {
            case ClassifierKind::tree: {
                TreeParams tree_params = params.tree;
                tree_params.leaf_kind = LeafKind::distribution;
                group.tree = train_tree(rows, tree_params);
                break;
            }
            case ClassifierKind::nbt: {
                TreeParams tree_params = params.tree;
                tree_params.leaf_kind = LeafKind::naive_bayes;
                group.tree = train_tree(rows, tree_params);
                break;
            }
            case ClassifierKind::forest: {
                ForestParams forest_params = params.forest;
                forest_params.seed = mix64(params.seed ^ (static_cast<std::uint64_t>(c) + 1));
                group.forest = train_forest(rows, forest_params);
                break;
            }
        }
        pipeline.groups.push_back(std::move(group));
    }
    return pipeline;
}

double ConfusionCounts::accuracy_percent() const {
    std::uint64_t total = tm() + tb();
    if (total == 0) return 0.0;
    return 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total);
}

EvalReport evaluate(const TrainedPipeline& pipeline, const SplitPlan& plan, const Corpus& corpus) {
    auto index = index_samples(corpus);
    EvalReport report;
    for (const GroupModel& group : pipeline.groups) {
        std::size_t c = static_cast<std::size_t>(group.cluster_index);
        ClusterEval eval;
        eval.cluster_index = group.cluster_index;
        if (c >= plan.test.size()) throw std::invalid_argument("split plan shorter than clustering");
        for (const std::string& id : plan.test[c]) {
            auto it = index.find(id);
            if (it == index.end()) throw std::invalid_argument("unknown sample id: " + id);
            const Sample& s = *it->second;
            Prediction p = group.predict_vector(
                group.constant ? std::vector<double>{}
                               : featurize(s, group.feature_set, pipeline.vocab.size()));
            bool truly_malware = s.label == Label::malware;
            if (truly_malware && p.label == 1) ++eval.counts.tp;
            else if (truly_malware) ++eval.counts.fn;
            else if (p.label == 1) ++eval.counts.fp;
            else ++eval.counts.tn;
        }
        report.pooled.tp += eval.counts.tp;
        report.pooled.tn += eval.counts.tn;
        report.pooled.fp += eval.counts.fp;
        report.pooled.fn += eval.counts.fn;
        report.per_cluster.push_back(eval);
    }
    if (report.per_cluster.size() != static_cast<std::size_t>(pipeline.clustering.k)) {
        throw std::invalid_argument("model missing for some cluster");
    }
    return report;
}

SweepReport sweep(const Corpus& corpus, const SizeClustering& clustering,
                  const std::vector<ClassifierKind>& kinds, const std::vector<int>& feature_counts,
                  double test_fraction, std::uint64_t seed, NormMode norm,
                  std::vector<std::string>* warnings) {
    if (feature_counts.empty()) throw std::invalid_argument("no feature counts to sweep");
    SplitPlan plan = split(clustering, corpus, test_fraction, seed);
    if (warnings) {
        warnings->insert(warnings->end(), plan.warnings.begin(), plan.warnings.end());
    }

    SweepReport report;
    for (ClassifierKind kind : kinds) {
        for (int n : feature_counts) {
            int effective_n = std::min(n, corpus.vocab.size());
            if (effective_n != n && warnings) {
                warnings->push_back("feature count " + std::to_string(n) + " clamped to " +
                                    std::to_string(effective_n));
            }
            PipelineParams params;
            params.kind = kind;
            params.n_features = effective_n;
            params.norm = norm;
            params.seed = seed;
            TrainedPipeline pipeline = train_pipeline(corpus, clustering, plan, params, warnings);
            EvalReport eval = evaluate(pipeline, plan, corpus);
            for (const ClusterEval& ce : eval.per_cluster) {
                report.rows.push_back(SweepRow{ce.cluster_index, kind, n, ce.counts});
            }
            report.rows.push_back(SweepRow{-1, kind, n, eval.pooled});
        }
    }
    return report;
}

std::string SweepReport::to_csv() const {
    std::ostringstream out;
    out << "cluster,classifier,n_features,tp,tn,fp,fn,accuracy\n";
    for (const SweepRow& row : rows) {
        if (row.cluster_index < 0) out << "all";
        else out << row.cluster_index;
        char acc[32];
        std::snprintf(acc, sizeof(acc), "%.4f", row.counts.accuracy_percent());
        out << ',' << to_string(row.kind) << ',' << row.n_features << ',' << row.counts.tp << ','
            << row.counts.tn << ',' << row.counts.fp << ',' << row.counts.fn << ',' << acc << '\n';
    }
    return out.str();
}

std::string SweepReport::to_json() const {
    json rows_json = json::array();
    for (const SweepRow& row : rows) {
        rows_json.push_back({{"cluster", row.cluster_index},
                             {"classifier", to_string(row.kind)},
                             {"n_features", row.n_features},
                             {"tp", row.counts.tp},
                             {"tn", row.counts.tn},
                             {"fp", row.counts.fp},
                             {"fn", row.counts.fn},
                             {"tm", row.counts.tm()},
                             {"tb", row.counts.tb()},
                             {"accuracy_percent", row.counts.accuracy_percent()}});
    }

    // Best pooled feature count per classifier, plus the best count per
    // cluster per classifier.
    json best_global = json::object();
    json best_per_cluster = json::object();
    for (const SweepRow& row : rows) {
        const char* kind = to_string(row.kind);
        double acc = row.counts.accuracy_percent();
        if (row.cluster_index < 0) {
            if (!best_global.contains(kind) ||
                best_global[kind]["accuracy_percent"].get<double>() < acc) {
                best_global[kind] = {{"n_features", row.n_features}, {"accuracy_percent", acc}};
            }
        } else {
            std::string cluster = std::to_string(row.cluster_index);
            if (!best_per_cluster.contains(kind)) best_per_cluster[kind] = json::object();
            if (!best_per_cluster[kind].contains(cluster) ||
                best_per_cluster[kind][cluster]["accuracy_percent"].get<double>() < acc) {
                best_per_cluster[kind][cluster] = {{"n_features", row.n_features},
                                                   {"accuracy_percent", acc}};
            }
        }
    }

    return json{{"rows", std::move(rows_json)},
                {"best_feature_count", std::move(best_global)},
                {"best_feature_count_per_cluster", std::move(best_per_cluster)}}
        .dump(2);
}

Classification classify_unknown(const TrainedPipeline& pipeline,
                                const std::vector<std::string>& mnemonics,
                                std::uint64_t size_bytes) {
    Sample sample;
    sample.size_bytes = size_bytes;
    Classification result;
    for (const std::string& mnemonic : mnemonics) {
        int id = pipeline.vocab.id_of(mnemonic);
        if (id == 0) {
            ++result.unknown_tokens;  // outside the training vocabulary
        } else {
            ++sample.counts[id];
        }
    }
    result.cluster_index = pipeline.clustering.assign_size(size_bytes);
    const GroupModel& group = pipeline.groups.at(static_cast<std::size_t>(result.cluster_index));
    Prediction p = group.predict_vector(
        group.constant ? std::vector<double>{}
                       : featurize(sample, group.feature_set, pipeline.vocab.size()));
    result.label = p.label;
    result.score = p.score;
    return result;
}

std::string split_plan_to_json(const SplitPlan& plan) {
    json clusters = json::array();
    for (std::size_t c = 0; c < plan.train.size(); ++c) {
        clusters.push_back({{"train", plan.train[c]}, {"test", plan.test[c]}});
    }
    return json{{"test_fraction", plan.test_fraction},
                {"seed", plan.seed},
                {"clusters", std::move(clusters)}}
        .dump();
}

SplitPlan split_plan_from_json(const std::string& text) {
    json j = json::parse(text);
    SplitPlan plan;
    plan.test_fraction = j.at("test_fraction").get<double>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const json& jc : j.at("clusters")) {
        plan.train.push_back(jc.at("train").get<std::vector<std::string>>());
        plan.test.push_back(jc.at("test").get<std::vector<std::string>>());
    }
    return plan;
}

std::string pipeline_to_json(const TrainedPipeline& pipeline, const SplitPlan* plan,
                             const std::string& corpus_path) {
    json groups = json::array();
    for (const GroupModel& group : pipeline.groups) {
        json jg{{"cluster", group.cluster_index},
                {"kind", to_string(group.kind)},
                {"features", group.feature_set}};
        if (group.constant) {
            jg["constant_label"] = group.constant_label;
        } else if (group.kind == ClassifierKind::forest) {
            jg["model"] = detail::forest_json_obj(group.forest);
        } else {
            jg["model"] = detail::tree_json_obj(*group.tree);
        }
        groups.push_back(std::move(jg));
    }
    json j{{"classifier", to_string(pipeline.params.kind)},
           {"n_features", pipeline.params.n_features},
           {"norm", to_string(pipeline.params.norm)},
           {"seed", pipeline.params.seed},
           {"vocab", pipeline.vocab.mnemonics()},
           {"clustering", json::parse(clustering_to_json(pipeline.clustering))},
           {"groups", std::move(groups)}};
    if (plan) j["split"] = json::parse(split_plan_to_json(*plan));
    if (!corpus_path.empty()) j["corpus_path"] = corpus_path;
    return j.dump(2);
}

TrainedPipeline pipeline_from_json(const std::string& text, SplitPlan* plan,
                                   std::string* corpus_path) {
    json j = json::parse(text);
    TrainedPipeline pipeline;
    pipeline.params.kind = classifier_kind_from_string(j.at("classifier").get<std::string>());
    pipeline.params.n_features = j.at("n_features").get<int>();
    pipeline.params.norm = norm_mode_from_string(j.at("norm").get<std::string>());
    pipeline.params.seed = j.at("seed").get<std::uint64_t>();
    pipeline.vocab = OpcodeVocab(j.at("vocab").get<std::vector<std::string>>());
    pipeline.clustering = clustering_from_json(j.at("clustering").dump());
    for (const json& jg : j.at("groups")) {
        GroupModel group;
        group.cluster_index = jg.at("cluster").get<int>();
        group.kind = classifier_kind_from_string(jg.at("kind").get<std::string>());
        group.feature_set = jg.at("features").get<std::vector<int>>();
        if (jg.contains("constant_label")) {
            group.constant = true;
            group.constant_label = jg.at("constant_label").get<int>();
        } else if (group.kind == ClassifierKind::forest) {
            group.forest = detail::forest_from_obj(jg.at("model"));
        } else {
            group.tree = detail::tree_from_json_obj(jg.at("model"));
        }
        pipeline.groups.push_back(std::move(group));
    }
    if (plan && j.contains("split")) *plan = split_plan_from_json(j.at("split").dump());
    if (corpus_path && j.contains("corpus_path")) {
        *corpus_path = j.at("corpus_path").get<std::string>();
    }
    return pipeline;
}

std::string eval_report_to_json(const EvalReport& report) {
    auto counts_json = [](const ConfusionCounts& c) {
        return json{{"tp", c.tp}, {"tn", c.tn}, {"fp", c.fp}, {"fn", c.fn},
                    {"tm", c.tm()}, {"tb", c.tb()},
                    {"accuracy_percent", c.accuracy_percent()}};
    };
    json per_cluster = json::array();
    for (const ClusterEval& ce : report.per_cluster) {
        json jc = counts_json(ce.counts);
        jc["cluster"] = ce.cluster_index;
        per_cluster.push_back(std::move(jc));
    }
    return json{{"per_cluster", std::move(per_cluster)}, {"pooled", counts_json(report.pooled)}}
        .dump(2);
}

std::string eval_report_to_csv(const EvalReport& report, ClassifierKind kind, int n_features) {
    SweepReport sweep_report;
    for (const ClusterEval& ce : report.per_cluster) {
        sweep_report.rows.push_back(SweepRow{ce.cluster_index, kind, n_features, ce.counts});
    }
    sweep_report.rows.push_back(SweepRow{-1, kind, n_features, report.pooled});
    return sweep_report.to_csv();
}

}  // namespace malgroup
