#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <string>
#include <vector>

#include "malgroup/classifier.hpp"
#include "malgroup/cluster.hpp"
#include "malgroup/corpus.hpp"
#include "malgroup/features.hpp"
#include "malgroup/parse.hpp"
#include "malgroup/pipeline.hpp"
#include "malgroup/synth.hpp"

namespace py = pybind11;
using namespace malgroup;

namespace {

std::vector<SizePoint> size_points(const Corpus& corpus) {
    std::vector<SizePoint> points;
    for (const Sample& s : corpus.samples) points.push_back({s.id, s.size_bytes});
    return points;
}

PipelineParams make_params(const std::string& classifier, int n_features, const std::string& norm,
                           std::uint64_t seed, int trees) {
    PipelineParams params;
    params.kind = classifier_kind_from_string(classifier);
    params.n_features = n_features;
    params.norm = norm_mode_from_string(norm);
    params.seed = seed;
    params.forest.trees = trees;
    return params;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Opcode-histogram malware detection core";

    m.def(
        "parse_disassembly",
        [](const std::string& text, bool strict) {
            auto r = parse_disassembly(text, strict);
            return py::make_tuple(r.mnemonics, r.malformed_lines);
        },
        py::arg("text"), py::arg("strict") = false,
        "Parse a disassembly listing into (mnemonics, malformed_line_count).");

    m.def("default_scenario_json", [] { return family_specs_to_json(default_scenario()); },
          "The built-in synthetic dataset spec as JSON.");

    m.def(
        "generate_dataset",
        [](const std::string& out_dir, std::uint64_t seed, const std::string& spec_json) {
            auto specs =
                spec_json.empty() ? default_scenario() : family_specs_from_json(spec_json);
            generate(specs, seed, out_dir);
        },
        py::arg("out_dir"), py::arg("seed") = 7, py::arg("spec_json") = std::string(),
        "Write a synthetic labeled dataset (malware/, benign/, manifest.tsv).");

    m.def(
        "ingest",
        [](const std::string& root, bool strict) {
            Corpus corpus = build_corpus(root, IngestOptions{.strict = strict});
            return corpus_to_json(corpus);
        },
        py::arg("root"), py::arg("strict") = false,
        "Parse a dataset directory into a corpus JSON string.");

    m.def(
        "select_features",
        [](const std::string& corpus_json, int n, const std::string& norm) {
            Corpus corpus = corpus_from_json(corpus_json);
            FeatureRanking r = select_features(corpus, n, norm_mode_from_string(norm));
            py::dict out;
            out["selected"] = r.selected;
            out["d"] = r.d;
            out["clamped"] = r.clamped;
            std::vector<std::string> names;
            for (int id : r.selected) names.push_back(corpus.vocab.mnemonic_of(id));
            out["mnemonics"] = names;
            return out;
        },
        py::arg("corpus_json"), py::arg("n") = 20, py::arg("norm") = "per-sample",
        "Rank opcodes by class-profile difference and pick the top n.");

    m.def(
        "kmeans_1d",
        [](const std::vector<std::uint64_t>& sizes, int k, bool log_size) {
            SizeClustering c = kmeans_1d_exact(sizes, k, log_size);
            std::vector<int> assignment(sizes.size());
            for (std::size_t i = 0; i < sizes.size(); ++i) {
                assignment[i] = c.assignment.at(std::to_string(i));
            }
            return py::make_tuple(assignment, c.boundaries, c.sse);
        },
        py::arg("sizes"), py::arg("k"), py::arg("log_size") = false,
        "Globally optimal 1-D k-means: (assignments, boundaries, sse).");

    m.def(
        "cluster",
        [](const std::string& corpus_json, int k, int k_max, bool log_size, double bic_lambda) {
            Corpus corpus = corpus_from_json(corpus_json);
            auto points = size_points(corpus);
            if (k > 0) {
                SizeClustering c = kmeans_1d_exact(points, k, log_size);
                return clustering_to_json(
                    c, {bic_score(c, points, BicOptions{.lambda = bic_lambda})});
            }
            auto result = choose_k(points, k_max, log_size, BicOptions{.lambda = bic_lambda});
            return clustering_to_json(result.clustering, result.curve);
        },
        py::arg("corpus_json"), py::arg("k") = 0, py::arg("k_max") = 15,
        py::arg("log_size") = false, py::arg("bic_lambda") = 1.0,
        "Cluster samples by file size; k=0 picks K by BIC. Returns clustering JSON.");

    m.def(
        "train",
        [](const std::string& corpus_json, const std::string& clustering_json,
           const std::string& classifier, int n_features, double test_fraction,
           std::uint64_t seed, const std::string& norm, int trees) {
            Corpus corpus = corpus_from_json(corpus_json);
            SizeClustering clustering = clustering_from_json(clustering_json);
            auto params = make_params(classifier, n_features, norm, seed, trees);
            SplitPlan plan = split(clustering, corpus, test_fraction, seed);
            TrainedPipeline pipeline = train_pipeline(corpus, clustering, plan, params);
            return pipeline_to_json(pipeline, &plan);
        },
        py::arg("corpus_json"), py::arg("clustering_json"), py::arg("classifier") = "nbt",
        py::arg("n_features") = 20, py::arg("test_fraction") = 0.15, py::arg("seed") = 7,
        py::arg("norm") = "per-sample", py::arg("trees") = 100,
        "Train per-cluster classifiers; returns model JSON with its split plan.");

    m.def(
        "evaluate",
        [](const std::string& model_json, const std::string& corpus_json) {
            SplitPlan plan;
            TrainedPipeline pipeline = pipeline_from_json(model_json, &plan);
            Corpus corpus = corpus_from_json(corpus_json);
            return eval_report_to_json(evaluate(pipeline, plan, corpus));
        },
        py::arg("model_json"), py::arg("corpus_json"),
        "Score a model on its held-out split; returns report JSON.");

    m.def(
        "sweep",
        [](const std::string& corpus_json, const std::string& clustering_json,
           const std::vector<std::string>& classifiers, const std::vector<int>& feature_counts,
           double test_fraction, std::uint64_t seed, const std::string& norm) {
            Corpus corpus = corpus_from_json(corpus_json);
            SizeClustering clustering = clustering_from_json(clustering_json);
            std::vector<ClassifierKind> kinds;
            for (const std::string& name : classifiers) {
                kinds.push_back(classifier_kind_from_string(name));
            }
            SweepReport report = sweep(corpus, clustering, kinds, feature_counts, test_fraction,
                                       seed, norm_mode_from_string(norm));
            return py::make_tuple(report.to_json(), report.to_csv());
        },
        py::arg("corpus_json"), py::arg("clustering_json"),
        py::arg("classifiers") = std::vector<std::string>{"tree", "forest", "nbt"},
        py::arg("feature_counts") = std::vector<int>{20, 40, 60, 100},
        py::arg("test_fraction") = 0.15, py::arg("seed") = 7, py::arg("norm") = "per-sample",
        "Cross classifiers with feature counts; returns (json, csv).");

    m.def(
        "classify",
        [](const std::string& model_json, const std::string& text, std::uint64_t size_bytes) {
            TrainedPipeline pipeline = pipeline_from_json(model_json);
            auto parsed = parse_disassembly(text);
            Classification r = classify_unknown(pipeline, parsed.mnemonics, size_bytes);
            py::dict out;
            out["label"] = r.label == 1 ? "malware" : "benign";
            out["score"] = r.score;
            out["cluster"] = r.cluster_index;
            out["unknown_tokens"] = r.unknown_tokens;
            out["malformed_lines"] = parsed.malformed_lines;
            return out;
        },
        py::arg("model_json"), py::arg("text"), py::arg("size_bytes"),
        "Classify one disassembly listing with a trained model.");
}
