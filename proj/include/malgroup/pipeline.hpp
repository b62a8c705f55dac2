#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "malgroup/classifier.hpp"
#include "malgroup/cluster.hpp"
#include "malgroup/corpus.hpp"
#include "malgroup/features.hpp"

namespace malgroup {

enum class ClassifierKind { tree, forest, nbt };

const char* to_string(ClassifierKind kind);
ClassifierKind classifier_kind_from_string(const std::string& s);

/// Per-cluster stratified train/test partition.
struct SplitPlan {
    double test_fraction = 0.15;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::string>> train;  // per cluster, sample ids
    std::vector<std::vector<std::string>> test;
    std::vector<std::string> warnings;
};

/// Within each cluster, each class contributes ceil(test_fraction * class
/// count) test samples (a lone class member always trains). Deterministic
/// given the seed; independent of corpus ordering.
SplitPlan split(const SizeClustering& clustering, const Corpus& corpus,
                double test_fraction = 0.15, std::uint64_t seed = 0);

struct PipelineParams {
    ClassifierKind kind = ClassifierKind::nbt;
    int n_features = 20;
    NormMode norm = NormMode::per_sample;
    std::uint64_t seed = 0;
    TreeParams tree;      // tree / nbt hyperparameters
    ForestParams forest;  // forest hyperparameters (seed derived per cluster)
};

/// Per-cluster trained classifier with its feature set. Clusters whose
/// training split holds only one class get a constant model.
struct GroupModel {
    int cluster_index = 0;
    std::vector<int> feature_set;  // opcode ids, ranking order
    ClassifierKind kind = ClassifierKind::nbt;
    bool constant = false;
    int constant_label = 0;
    TreePtr tree;        // tree / nbt
    ForestModel forest;  // forest

    Prediction predict_vector(const std::vector<double>& x) const;
};

struct TrainedPipeline {
    OpcodeVocab vocab;
    SizeClustering clustering;
    PipelineParams params;
    std::vector<GroupModel> groups;
};

/// Feature selection and training use only the plan's training ids.
TrainedPipeline train_pipeline(const Corpus& corpus, const SizeClustering& clustering,
                               const SplitPlan& plan, const PipelineParams& params,
                               std::vector<std::string>* warnings = nullptr);

struct ConfusionCounts {
    std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

    std::uint64_t tm() const { return tp + fn; }
    std::uint64_t tb() const { return tn + fp; }
    double accuracy_percent() const;
};

struct ClusterEval {
    int cluster_index = 0;
    ConfusionCounts counts;
};

struct EvalReport {
    std::vector<ClusterEval> per_cluster;
    ConfusionCounts pooled;
};

EvalReport evaluate(const TrainedPipeline& pipeline, const SplitPlan& plan, const Corpus& corpus);

struct SweepRow {
    int cluster_index = -1;  // -1 = pooled
    ClassifierKind kind = ClassifierKind::nbt;
    int n_features = 0;
    ConfusionCounts counts;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    std::string to_csv() const;
    std::string to_json() const;
};

/// Cross product of classifier kinds and feature counts over one shared
/// split plan. Feature counts above the vocabulary size are clamped.
SweepReport sweep(const Corpus& corpus, const SizeClustering& clustering,
                  const std::vector<ClassifierKind>& kinds,
                  const std::vector<int>& feature_counts, double test_fraction = 0.15,
                  std::uint64_t seed = 0, NormMode norm = NormMode::per_sample,
                  std::vector<std::string>* warnings = nullptr);

struct Classification {
    int label = 0;  // 1 = malware
    double score = 0.0;
    int cluster_index = 0;
    std::size_t unknown_tokens = 0;  // mnemonics outside the training vocabulary
};

/// Routes by size-interval membership, featurizes with the target
/// cluster's feature set, predicts.
Classification classify_unknown(const TrainedPipeline& pipeline,
                                const std::vector<std::string>& mnemonics,
                                std::uint64_t size_bytes);

/// Normalized per-sample frequencies projected onto a feature set.
std::vector<double> featurize(const Sample& sample, const std::vector<int>& feature_set,
                              int vocab_size);

std::string split_plan_to_json(const SplitPlan& plan);
SplitPlan split_plan_from_json(const std::string& text);

std::string pipeline_to_json(const TrainedPipeline& pipeline, const SplitPlan* plan = nullptr,
                             const std::string& corpus_path = "");
TrainedPipeline pipeline_from_json(const std::string& text, SplitPlan* plan = nullptr,
                                   std::string* corpus_path = nullptr);

std::string eval_report_to_json(const EvalReport& report);
std::string eval_report_to_csv(const EvalReport& report, ClassifierKind kind, int n_features);

}  // namespace malgroup
