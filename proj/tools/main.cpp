#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "malgroup/classifier.hpp"
#include "malgroup/cluster.hpp"
#include "malgroup/corpus.hpp"
#include "malgroup/features.hpp"
#include "malgroup/parse.hpp"
#include "malgroup/pipeline.hpp"
#include "malgroup/synth.hpp"

namespace fs = std::filesystem;
using namespace malgroup;

namespace {

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const std::string& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::vector<SizePoint> size_points(const Corpus& corpus) {
    std::vector<SizePoint> points;
    points.reserve(corpus.samples.size());
    for (const Sample& s : corpus.samples) points.push_back({s.id, s.size_bytes});
    return points;
}

nlohmann::json cluster_class_counts(const SizeClustering& clustering, const Corpus& corpus) {
    std::vector<std::size_t> malware(static_cast<std::size_t>(clustering.k), 0);
    std::vector<std::size_t> benign(static_cast<std::size_t>(clustering.k), 0);
    for (const Sample& s : corpus.samples) {
        auto it = clustering.assignment.find(s.id);
        if (it == clustering.assignment.end()) continue;
        auto c = static_cast<std::size_t>(it->second);
        (s.label == Label::malware ? malware : benign)[c] += 1;
    }
    nlohmann::json out = nlohmann::json::array();
    for (int c = 0; c < clustering.k; ++c) {
        out.push_back({{"cluster", c},
                       {"malware", malware[static_cast<std::size_t>(c)]},
                       {"benign", benign[static_cast<std::size_t>(c)]}});
    }
    return out;
}

int run_synth(const std::string& spec_path, std::uint64_t seed, const std::string& out_dir,
              const std::string& write_spec) {
    std::vector<FamilySpec> specs =
        spec_path.empty() ? default_scenario() : family_specs_from_json(slurp(spec_path));
    if (!write_spec.empty()) spill(write_spec, family_specs_to_json(specs));
    generate(specs, seed, out_dir);
    std::size_t total = 0;
    for (const FamilySpec& s : specs) total += static_cast<std::size_t>(s.count);
    std::cout << "wrote " << total << " samples from " << specs.size() << " families to "
              << out_dir << "\n";
    return 0;
}

int run_ingest(const std::string& root, bool strict, const std::string& out) {
    IngestWarnings warnings;
    Corpus corpus = build_corpus(root, IngestOptions{.strict = strict}, &warnings);
    print_warnings(warnings.messages);
    save_corpus(corpus, out);
    std::cout << "ingested " << corpus.samples.size() << " samples ("
              << corpus.count_with_label(Label::malware) << " malware, "
              << corpus.count_with_label(Label::benign) << " benign), vocabulary "
              << corpus.vocab.size() << " opcodes";
    if (warnings.skipped_lines > 0) std::cout << ", skipped " << warnings.skipped_lines << " lines";
    std::cout << " -> " << out << "\n";
    return 0;
}

int run_featurize(const std::string& corpus_path, int n, const std::string& norm,
                  const std::string& out) {
    Corpus corpus = load_corpus(corpus_path);
    FeatureRanking ranking = select_features(corpus, n, norm_mode_from_string(norm));
    if (ranking.clamped) {
        std::cerr << "warning: requested " << n << " features, vocabulary holds only "
                  << corpus.vocab.size() << "\n";
    }
    nlohmann::json j;
    j["norm"] = norm;
    j["n_requested"] = n;
    j["selected"] = ranking.selected;
    nlohmann::json detail = nlohmann::json::array();
    for (int id : ranking.selected) {
        detail.push_back({{"id", id},
                          {"mnemonic", corpus.vocab.mnemonic_of(id)},
                          {"d", ranking.d[static_cast<std::size_t>(id - 1)]}});
    }
    j["features"] = detail;
    j["d"] = ranking.d;
    spill(out, j.dump(2) + "\n");
    std::cout << "selected " << ranking.selected.size() << " features -> " << out << "\n";
    return 0;
}

int run_cluster(const std::string& corpus_path, int k, int k_max, bool log_size, double lambda,
                const std::string& out) {
    Corpus corpus = load_corpus(corpus_path);
    auto points = size_points(corpus);

    SizeClustering clustering;
    std::vector<BicRecord> curve;
    if (k > 0) {
        clustering = kmeans_1d_exact(points, k, log_size);
        curve.push_back(bic_score(clustering, points, BicOptions{.lambda = lambda}));
    } else {
        auto result = choose_k(points, k_max, log_size, BicOptions{.lambda = lambda});
        clustering = std::move(result.clustering);
        curve = std::move(result.curve);
    }

    nlohmann::json j = nlohmann::json::parse(clustering_to_json(clustering, curve));
    j["class_counts"] = cluster_class_counts(clustering, corpus);
    spill(out, j.dump(2) + "\n");

    std::cout << "k=" << clustering.k << " boundaries=[";
    for (std::size_t i = 0; i < clustering.boundaries.size(); ++i) {
        std::cout << (i ? ", " : "") << static_cast<std::uint64_t>(clustering.boundaries[i]);
    }
    std::cout << "] -> " << out << "\n";
    return 0;
}

int run_train(const std::string& corpus_path, const std::string& clusters_path,
              const std::string& classifier, int n_features, double test_fraction,
              std::uint64_t seed, int trees, const std::string& norm, const std::string& out) {
    Corpus corpus = load_corpus(corpus_path);
    SizeClustering clustering = clustering_from_json(slurp(clusters_path));

    PipelineParams params;
    params.kind = classifier_kind_from_string(classifier);
    params.n_features = n_features;
    params.norm = norm_mode_from_string(norm);
    params.seed = seed;
    params.forest.trees = trees;

    SplitPlan plan = split(clustering, corpus, test_fraction, seed);
    print_warnings(plan.warnings);

    std::vector<std::string> warnings;
    TrainedPipeline pipeline = train_pipeline(corpus, clustering, plan, params, &warnings);
    print_warnings(warnings);

    spill(out, pipeline_to_json(pipeline, &plan, corpus_path));
    std::cout << "trained " << classifier << " over " << pipeline.groups.size()
              << " clusters (" << n_features << " features each) -> " << out << "\n";
    return 0;
}

int run_evaluate(const std::string& model_path, const std::string& report_path,
                 const std::string& csv_path, const std::string& corpus_override) {
    SplitPlan plan;
    std::string corpus_path;
    TrainedPipeline pipeline = pipeline_from_json(slurp(model_path), &plan, &corpus_path);
    if (!corpus_override.empty()) corpus_path = corpus_override;
    if (corpus_path.empty()) {
        throw std::runtime_error("model records no corpus path; pass --corpus");
    }
    Corpus corpus = load_corpus(corpus_path);

    EvalReport report = evaluate(pipeline, plan, corpus);
    spill(report_path, eval_report_to_json(report));
    if (!csv_path.empty()) {
        spill(csv_path, eval_report_to_csv(report, pipeline.params.kind,
                                           pipeline.params.n_features));
    }
    std::cout << "accuracy " << report.pooled.accuracy_percent() << "% on "
              << (report.pooled.tm() + report.pooled.tb()) << " held-out samples -> "
              << report_path << "\n";
    return 0;
}

int run_sweep(const std::string& corpus_path, const std::string& clusters_path,
              const std::vector<int>& feature_counts, const std::vector<std::string>& classifiers,
              double test_fraction, std::uint64_t seed, const std::string& norm,
              const std::string& out, const std::string& csv) {
    Corpus corpus = load_corpus(corpus_path);
    SizeClustering clustering = clustering_from_json(slurp(clusters_path));

    std::vector<ClassifierKind> kinds;
    for (const std::string& name : classifiers) kinds.push_back(classifier_kind_from_string(name));

    std::vector<std::string> warnings;
    SweepReport report = sweep(corpus, clustering, kinds, feature_counts, test_fraction, seed,
                               norm_mode_from_string(norm), &warnings);
    print_warnings(warnings);

    if (!out.empty()) spill(out, report.to_json());
    if (!csv.empty()) spill(csv, report.to_csv());

    for (const SweepRow& row : report.rows) {
        if (row.cluster_index != -1) continue;
        std::cout << to_string(row.kind) << " n=" << row.n_features << " accuracy="
                  << row.counts.accuracy_percent() << "%\n";
    }
    return 0;
}

int run_classify(const std::string& model_path, const std::string& file,
                 std::uint64_t size_bytes) {
    TrainedPipeline pipeline = pipeline_from_json(slurp(model_path));
    std::string text = slurp(file);
    auto parsed = parse_disassembly(text);
    if (size_bytes == 0) size_bytes = fs::file_size(file);

    Classification result = classify_unknown(pipeline, parsed.mnemonics, size_bytes);
    nlohmann::json j{{"file", file},
                     {"label", result.label == 1 ? "malware" : "benign"},
                     {"score", result.score},
                     {"cluster", result.cluster_index},
                     {"size_bytes", size_bytes},
                     {"tokens", parsed.mnemonics.size()},
                     {"unknown_tokens", result.unknown_tokens},
                     {"malformed_lines", parsed.malformed_lines}};
    std::cout << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Opcode-histogram malware detection: synthesize, ingest, cluster, train"};
    app.require_subcommand(1);

    // synth
    std::string synth_spec, synth_out, synth_write_spec;
    std::uint64_t synth_seed = 7;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labeled dataset");
    synth_cmd->add_option("--spec", synth_spec, "Family spec JSON (default: built-in scenario)");
    synth_cmd->add_option("--seed", synth_seed, "RNG seed");
    synth_cmd->add_option("--out", synth_out, "Output dataset directory")->required();
    synth_cmd->add_option("--write-spec", synth_write_spec,
                          "Also write the effective family spec JSON here");

    // ingest
    std::string ingest_root, ingest_out;
    bool ingest_strict = false;
    auto* ingest_cmd = app.add_subcommand("ingest", "Parse a dataset into a corpus JSON");
    ingest_cmd->add_option("--root", ingest_root, "Dataset root with malware/ and benign/")
        ->required();
    ingest_cmd->add_flag("--strict", ingest_strict, "Fail on malformed instruction lines");
    ingest_cmd->add_option("--out", ingest_out, "Corpus JSON path")->required();

    // featurize
    std::string feat_corpus, feat_out, feat_norm = "per-sample";
    int feat_n = 20;
    auto* feat_cmd = app.add_subcommand("featurize", "Rank and select discriminative opcodes");
    feat_cmd->add_option("--corpus", feat_corpus, "Corpus JSON")->required();
    feat_cmd->add_option("--n", feat_n, "Number of features");
    feat_cmd->add_option("--norm", feat_norm, "per-sample | per-opcode");
    feat_cmd->add_option("--out", feat_out, "Feature ranking JSON path")->required();

    // cluster
    std::string clus_corpus, clus_out;
    int clus_k = 0, clus_k_max = 15;
    bool clus_log = false;
    double clus_lambda = 1.0;
    auto* clus_cmd = app.add_subcommand("cluster", "Group samples by file size");
    clus_cmd->add_option("--corpus", clus_corpus, "Corpus JSON")->required();
    clus_cmd->add_option("--k", clus_k, "Fixed cluster count (default: pick by BIC)");
    clus_cmd->add_option("--k-max", clus_k_max, "Largest k considered by the BIC sweep");
    clus_cmd->add_flag("--log-size", clus_log, "Cluster log(size) instead of raw bytes");
    clus_cmd->add_option("--bic-lambda", clus_lambda, "BIC penalty multiplier");
    clus_cmd->add_option("--out", clus_out, "Clustering JSON path")->required();

    // train
    std::string train_corpus, train_clusters, train_classifier = "nbt", train_out;
    std::string train_norm = "per-sample";
    int train_n = 20, train_trees = 100;
    double train_fraction = 0.15;
    std::uint64_t train_seed = 7;
    auto* train_cmd = app.add_subcommand("train", "Train per-cluster classifiers");
    train_cmd->add_option("--corpus", train_corpus, "Corpus JSON")->required();
    train_cmd->add_option("--clusters", train_clusters, "Clustering JSON")->required();
    train_cmd->add_option("--classifier", train_classifier, "nbt | tree | forest");
    train_cmd->add_option("--n-features", train_n, "Features per cluster");
    train_cmd->add_option("--test-fraction", train_fraction, "Held-out share per class");
    train_cmd->add_option("--seed", train_seed, "RNG seed");
    train_cmd->add_option("--trees", train_trees, "Forest size (forest only)");
    train_cmd->add_option("--norm", train_norm, "per-sample | per-opcode");
    train_cmd->add_option("--out", train_out, "Model JSON path")->required();

    // evaluate
    std::string eval_model, eval_report, eval_csv, eval_corpus;
    auto* eval_cmd = app.add_subcommand("evaluate", "Score a model on its held-out split");
    eval_cmd->add_option("--model", eval_model, "Model JSON")->required();
    eval_cmd->add_option("--report", eval_report, "Report JSON path")->required();
    eval_cmd->add_option("--csv", eval_csv, "Also write a CSV report here");
    eval_cmd->add_option("--corpus", eval_corpus, "Override the corpus path stored in the model");

    // sweep
    std::string sweep_corpus, sweep_clusters, sweep_out, sweep_csv;
    std::string sweep_norm = "per-sample";
    std::vector<int> sweep_counts{20, 40, 60, 100};
    std::vector<std::string> sweep_kinds{"tree", "forest", "nbt"};
    double sweep_fraction = 0.15;
    std::uint64_t sweep_seed = 7;
    auto* sweep_cmd = app.add_subcommand("sweep", "Cross classifiers with feature counts");
    sweep_cmd->add_option("--corpus", sweep_corpus, "Corpus JSON")->required();
    sweep_cmd->add_option("--clusters", sweep_clusters, "Clustering JSON")->required();
    sweep_cmd->add_option("--feature-counts", sweep_counts, "Feature counts to try")
        ->delimiter(',');
    sweep_cmd->add_option("--classifiers", sweep_kinds, "Classifiers to try")->delimiter(',');
    sweep_cmd->add_option("--test-fraction", sweep_fraction, "Held-out share per class");
    sweep_cmd->add_option("--seed", sweep_seed, "RNG seed");
    sweep_cmd->add_option("--norm", sweep_norm, "per-sample | per-opcode");
    sweep_cmd->add_option("--out", sweep_out, "Sweep JSON path");
    sweep_cmd->add_option("--csv", sweep_csv, "Sweep CSV path");

    // classify
    std::string cls_model, cls_file;
    std::uint64_t cls_size = 0;
    auto* cls_cmd = app.add_subcommand("classify", "Classify one disassembly listing");
    cls_cmd->add_option("--model", cls_model, "Model JSON")->required();
    cls_cmd->add_option("--file", cls_file, "Disassembly listing")->required();
    cls_cmd->add_option("--size-bytes", cls_size,
                        "Original executable size (default: listing file size)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) return run_synth(synth_spec, synth_seed, synth_out,
                                                  synth_write_spec);
        if (ingest_cmd->parsed()) return run_ingest(ingest_root, ingest_strict, ingest_out);
        if (feat_cmd->parsed()) return run_featurize(feat_corpus, feat_n, feat_norm, feat_out);
        if (clus_cmd->parsed()) return run_cluster(clus_corpus, clus_k, clus_k_max, clus_log,
                                                   clus_lambda, clus_out);
        if (train_cmd->parsed()) return run_train(train_corpus, train_clusters, train_classifier,
                                                  train_n, train_fraction, train_seed, train_trees,
                                                  train_norm, train_out);
        if (eval_cmd->parsed()) return run_evaluate(eval_model, eval_report, eval_csv, eval_corpus);
        if (sweep_cmd->parsed()) return run_sweep(sweep_corpus, sweep_clusters, sweep_counts,
                                                  sweep_kinds, sweep_fraction, sweep_seed,
                                                  sweep_norm, sweep_out, sweep_csv);
        if (cls_cmd->parsed()) return run_classify(cls_model, cls_file, cls_size);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
