#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace malgroup {

enum class Label { benign = 0, malware = 1 };

const char* to_string(Label label);
Label label_from_string(const std::string& s);

/// Bijection between lowercase mnemonics and dense ids 1..V,
/// assigned in lexicographic mnemonic order.
class OpcodeVocab {
public:
    OpcodeVocab() = default;

    // Mnemonics are sorted and deduplicated; ids follow sort order.
    explicit OpcodeVocab(std::vector<std::string> mnemonics);

    int size() const { return static_cast<int>(mnemonics_.size()); }

    // 0 if unknown.
    int id_of(const std::string& mnemonic) const;

    // id must be in 1..size().
    const std::string& mnemonic_of(int id) const;

    const std::vector<std::string>& mnemonics() const { return mnemonics_; }

private:
    std::vector<std::string> mnemonics_;  // index i holds the mnemonic with id i+1
    std::unordered_map<std::string, int> ids_;
};

/// One executable: label, recorded size, sparse opcode histogram.
struct Sample {
    std::string id;
    Label label = Label::benign;
    std::uint64_t size_bytes = 0;
    std::map<int, std::uint64_t> counts;  // opcode id -> count

    std::uint64_t total_count() const;
};

struct Corpus {
    OpcodeVocab vocab;
    std::vector<Sample> samples;
    std::vector<std::string> provenance;

    std::size_t count_with_label(Label label) const;
};

struct IngestOptions {
    bool strict = false;
};

struct IngestWarnings {
    std::vector<std::string> messages;
    std::size_t skipped_lines = 0;
};

/// Builds a corpus from <root>/malware/*.asm and <root>/benign/*.asm.
/// Sizes come from <root>/manifest.tsv when present, else from the
/// disassembly file's own byte size. Throws on a missing class directory.
Corpus build_corpus(const std::filesystem::path& root,
                    const IngestOptions& options = {},
                    IngestWarnings* warnings = nullptr);

std::string corpus_to_json(const Corpus& corpus);
Corpus corpus_from_json(const std::string& text);

void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_corpus(const std::filesystem::path& path);

}  // namespace malgroup
