#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "malgroup/corpus.hpp"

namespace malgroup {

/// One synthetic family: a tight Gaussian size distribution plus an
/// opcode sampling profile, mimicking the near-constant output size of a
/// metamorphic generator kit.
struct FamilySpec {
    std::string name;
    Label label = Label::malware;
    double size_mean = 0.0;    // bytes
    double size_stddev = 0.0;  // bytes
    std::vector<std::pair<std::string, double>> opcode_profile;  // mnemonic -> weight
    double length_mean = 0.0;  // instructions per sample
    int count = 1;
};

struct SynthSample {
    std::string rel_path;  // e.g. "malware/kit1_0003.asm"
    Label label = Label::benign;
    std::uint64_t size_bytes = 0;
    std::vector<std::string> tokens;
};

/// Draws every sample of every family; deterministic given (specs, seed),
/// independent of evaluation order (per-sample derived seeds).
std::vector<SynthSample> generate_samples(const std::vector<FamilySpec>& specs,
                                          std::uint64_t seed);

/// Materializes generate_samples() as an ingestible dataset:
/// <root>/malware/*.asm, <root>/benign/*.asm, <root>/manifest.tsv with the
/// drawn sizes. Byte-identical across runs with the same inputs.
void generate(const std::vector<FamilySpec>& specs, std::uint64_t seed,
              const std::filesystem::path& out_root);

/// Renders one sample as disassembly text in the ingest grammar.
std::string render_listing(const SynthSample& sample);

/// The shipped acceptance scenario: 3 malware kits and 2 benign families,
/// all size-separated (gap >= 20x stddev), profiles overlapping on 80% of
/// the opcode pool and differing strongly on the rest.
std::vector<FamilySpec> default_scenario();

std::vector<FamilySpec> family_specs_from_json(const std::string& text);
std::string family_specs_to_json(const std::vector<FamilySpec>& specs);

}  // namespace malgroup
