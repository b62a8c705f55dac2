#include "malgroup/features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace malgroup {

NormMode norm_mode_from_string(const std::string& s) {
    if (s == "per-sample") return NormMode::per_sample;
    if (s == "per-opcode") return NormMode::per_opcode;
    throw std::invalid_argument("unknown normalization mode: " + s);
}

const char* to_string(NormMode mode) {
    return mode == NormMode::per_sample ? "per-sample" : "per-opcode";
}

std::vector<double> normalize_sample(const Sample& sample, int vocab_size) {
    std::vector<double> out(static_cast<std::size_t>(vocab_size), 0.0);
    std::uint64_t max_count = 0;
    for (const auto& [id, count] : sample.counts) max_count = std::max(max_count, count);
    if (max_count == 0) return out;  // empty histogram -> zero vector
    for (const auto& [id, count] : sample.counts) {
        out[static_cast<std::size_t>(id) - 1] =
            static_cast<double>(count) / static_cast<double>(max_count);
    }
    return out;
}

ClassProfile class_profile(const std::vector<const Sample*>& samples, Label label,
                           int vocab_size, NormMode mode) {
    const std::size_t v = static_cast<std::size_t>(vocab_size);
    ClassProfile profile;
    profile.s_f.assign(v, 0.0);

    std::vector<const Sample*> members;
    for (const Sample* s : samples) {
        if (s->label == label) members.push_back(s);
    }
    if (members.empty()) {
        throw std::invalid_argument(std::string("empty class: ") + to_string(label));
    }
    profile.n_class = members.size();

    if (mode == NormMode::per_sample) {
        for (const Sample* s : members) {
            std::uint64_t max_count = 0;
            for (const auto& [id, count] : s->counts) max_count = std::max(max_count, count);
            if (max_count == 0) continue;
            for (const auto& [id, count] : s->counts) {
                profile.s_f[static_cast<std::size_t>(id) - 1] +=
                    static_cast<double>(count) / static_cast<double>(max_count);
            }
        }
    } else {
        // Per-opcode maximum across the class as the denominator.
        std::vector<std::uint64_t> max_per_opcode(v, 0);
        for (const Sample* s : members) {
            for (const auto& [id, count] : s->counts) {
                auto& m = max_per_opcode[static_cast<std::size_t>(id) - 1];
                m = std::max(m, count);
            }
        }
        for (const Sample* s : members) {
            for (const auto& [id, count] : s->counts) {
                std::size_t idx = static_cast<std::size_t>(id) - 1;
                profile.s_f[idx] += static_cast<double>(count) /
                                    static_cast<double>(max_per_opcode[idx]);
            }
        }
    }

    for (double& x : profile.s_f) x /= static_cast<double>(profile.n_class);
    return profile;
}

FeatureRanking select_features(const std::vector<const Sample*>& samples, int vocab_size,
                               int n, NormMode mode) {
    if (n <= 0) throw std::invalid_argument("feature count must be positive");
    ClassProfile malware = class_profile(samples, Label::malware, vocab_size, mode);
    ClassProfile benign = class_profile(samples, Label::benign, vocab_size, mode);

    FeatureRanking ranking;
    ranking.d.resize(static_cast<std::size_t>(vocab_size));
    for (std::size_t i = 0; i < ranking.d.size(); ++i) {
        ranking.d[i] = std::abs(malware.s_f[i] - benign.s_f[i]);
    }

    std::vector<int> ids(static_cast<std::size_t>(vocab_size));
    std::iota(ids.begin(), ids.end(), 1);
    std::stable_sort(ids.begin(), ids.end(), [&](int a, int b) {
        double da = ranking.d[static_cast<std::size_t>(a) - 1];
        double db = ranking.d[static_cast<std::size_t>(b) - 1];
        if (da != db) return da > db;
        return a < b;
    });

    if (n > vocab_size) {
        ranking.clamped = true;
        n = vocab_size;
    }
    ranking.selected.assign(ids.begin(), ids.begin() + n);
    return ranking;
}

FeatureRanking select_features(const Corpus& corpus, int n, NormMode mode) {
    std::vector<const Sample*> samples;
    samples.reserve(corpus.samples.size());
    for (const Sample& s : corpus.samples) samples.push_back(&s);
    return select_features(samples, corpus.vocab.size(), n, mode);
}

}  // namespace malgroup
