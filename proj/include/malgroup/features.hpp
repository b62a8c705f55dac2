#pragma once

#include <string>
#include <vector>

#include "malgroup/corpus.hpp"

namespace malgroup {

enum class NormMode {
    per_sample,  // each histogram scaled by its own maximum count (default)
    per_opcode,  // each opcode scaled by its maximum count across the class
};

NormMode norm_mode_from_string(const std::string& s);
const char* to_string(NormMode mode);

/// Per-sample normalized frequencies as a dense vector over opcode ids
/// (index id-1). The most frequent opcode maps to exactly 1.0; an empty
/// histogram yields the zero vector.
std::vector<double> normalize_sample(const Sample& sample, int vocab_size);

struct ClassProfile {
    std::vector<double> s_f;  // class-averaged normalized frequency per opcode
    std::size_t n_class = 0;
};

/// Mean of the normalized frequency vectors over all samples carrying
/// `label`. Throws if the class is empty.
ClassProfile class_profile(const std::vector<const Sample*>& samples, Label label,
                           int vocab_size, NormMode mode = NormMode::per_sample);

struct FeatureRanking {
    std::vector<double> d;      // |S_Fm - S_Fb| per opcode, index id-1
    std::vector<int> selected;  // top-n ids, descending d, ascending id on ties
    bool clamped = false;       // n exceeded the vocabulary size
};

FeatureRanking select_features(const std::vector<const Sample*>& samples, int vocab_size,
                               int n, NormMode mode = NormMode::per_sample);
FeatureRanking select_features(const Corpus& corpus, int n,
                               NormMode mode = NormMode::per_sample);

}  // namespace malgroup
