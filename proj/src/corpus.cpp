#include "malgroup/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "malgroup/parse.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace malgroup {

const char* to_string(Label label) {
    return label == Label::malware ? "malware" : "benign";
}

Label label_from_string(const std::string& s) {
    if (s == "malware") return Label::malware;
    if (s == "benign") return Label::benign;
    throw std::invalid_argument("unknown label: " + s);
}

OpcodeVocab::OpcodeVocab(std::vector<std::string> mnemonics) : mnemonics_(std::move(mnemonics)) {
    std::sort(mnemonics_.begin(), mnemonics_.end());
    mnemonics_.erase(std::unique(mnemonics_.begin(), mnemonics_.end()), mnemonics_.end());
    ids_.reserve(mnemonics_.size());
    for (std::size_t i = 0; i < mnemonics_.size(); ++i) {
        ids_.emplace(mnemonics_[i], static_cast<int>(i) + 1);
    }
}

int OpcodeVocab::id_of(const std::string& mnemonic) const {
    auto it = ids_.find(mnemonic);
    return it == ids_.end() ? 0 : it->second;
}

const std::string& OpcodeVocab::mnemonic_of(int id) const {
    if (id < 1 || id > size()) throw std::out_of_range("opcode id out of range");
    return mnemonics_[static_cast<std::size_t>(id) - 1];
}

std::uint64_t Sample::total_count() const {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0},
                           [](std::uint64_t acc, const auto& kv) { return acc + kv.second; });
}

std::size_t Corpus::count_with_label(Label label) const {
    return static_cast<std::size_t>(
        std::count_if(samples.begin(), samples.end(),
                      [label](const Sample& s) { return s.label == label; }));
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// manifest.tsv: one `<relative path>\t<size in bytes>` per line.
std::unordered_map<std::string, std::uint64_t> read_manifest(const fs::path& path) {
    std::unordered_map<std::string, std::uint64_t> sizes;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) throw std::runtime_error("malformed manifest line: " + line);
        sizes[line.substr(0, tab)] = std::stoull(line.substr(tab + 1));
    }
    return sizes;
}

}  // namespace

Corpus build_corpus(const fs::path& root, const IngestOptions& options, IngestWarnings* warnings) {
    IngestWarnings local;
    IngestWarnings& warn = warnings ? *warnings : local;

    std::unordered_map<std::string, std::uint64_t> manifest;
    if (fs::exists(root / "manifest.tsv")) manifest = read_manifest(root / "manifest.tsv");

    struct Raw {
        std::string id;
        Label label;
        std::uint64_t size_bytes;
        std::vector<std::string> tokens;
    };
    std::vector<Raw> raws;

    for (Label label : {Label::malware, Label::benign}) {
        fs::path dir = root / to_string(label);
        if (!fs::is_directory(dir)) {
            throw std::runtime_error("missing dataset directory: " + dir.string());
        }
        for (const auto& entry : fs::directory_iterator(dir)) {
            if (!entry.is_regular_file() || entry.path().extension() != ".asm") continue;
            std::string rel = std::string(to_string(label)) + "/" + entry.path().filename().string();
            std::string text = read_file(entry.path());
            ParseResult parsed = parse_disassembly(text, options.strict);
            if (parsed.malformed_lines > 0) {
                warn.skipped_lines += parsed.malformed_lines;
                warn.messages.push_back(rel + ": skipped " + std::to_string(parsed.malformed_lines) +
                                        " malformed line(s)");
            }
            if (parsed.mnemonics.empty()) {
                warn.messages.push_back(rel + ": no instructions parsed");
            }
            std::uint64_t size_bytes;
            if (auto it = manifest.find(rel); it != manifest.end()) {
                size_bytes = it->second;
            } else if (auto jt = manifest.find(entry.path().filename().string()); jt != manifest.end()) {
                size_bytes = jt->second;
            } else {
                size_bytes = static_cast<std::uint64_t>(fs::file_size(entry.path()));
            }
            raws.push_back(Raw{std::move(rel), label, size_bytes, std::move(parsed.mnemonics)});
        }
    }

    // Sort by id so the result is independent of directory enumeration order.
    std::sort(raws.begin(), raws.end(), [](const Raw& a, const Raw& b) { return a.id < b.id; });

    std::vector<std::string> all_mnemonics;
    for (const Raw& raw : raws) {
        all_mnemonics.insert(all_mnemonics.end(), raw.tokens.begin(), raw.tokens.end());
    }

    Corpus corpus;
    corpus.vocab = OpcodeVocab(std::move(all_mnemonics));
    corpus.provenance.push_back(root.string());
    corpus.samples.reserve(raws.size());
    for (const Raw& raw : raws) {
        Sample sample;
        sample.id = raw.id;
        sample.label = raw.label;
        sample.size_bytes = raw.size_bytes;
        for (const std::string& mnemonic : raw.tokens) {
            ++sample.counts[corpus.vocab.id_of(mnemonic)];
        }
        corpus.samples.push_back(std::move(sample));
    }
    return corpus;
}

std::string corpus_to_json(const Corpus& corpus) {
    json j;
    j["vocab"] = corpus.vocab.mnemonics();
    j["provenance"] = corpus.provenance;
    json samples = json::array();
    for (const Sample& s : corpus.samples) {
        json counts = json::object();
        for (const auto& [id, count] : s.counts) counts[std::to_string(id)] = count;
        samples.push_back({{"id", s.id},
                           {"label", to_string(s.label)},
                           {"size_bytes", s.size_bytes},
                           {"counts", std::move(counts)}});
    }
    j["samples"] = std::move(samples);
    return j.dump(2);
}

Corpus corpus_from_json(const std::string& text) {
    json j = json::parse(text);
    Corpus corpus;
    corpus.vocab = OpcodeVocab(j.at("vocab").get<std::vector<std::string>>());
    corpus.provenance = j.value("provenance", std::vector<std::string>{});
    for (const json& js : j.at("samples")) {
        Sample s;
        s.id = js.at("id").get<std::string>();
        s.label = label_from_string(js.at("label").get<std::string>());
        s.size_bytes = js.at("size_bytes").get<std::uint64_t>();
        for (const auto& [key, value] : js.at("counts").items()) {
            int id = std::stoi(key);
            if (id < 1 || id > corpus.vocab.size()) {
                throw std::runtime_error("corpus sample " + s.id + " references unknown opcode id " + key);
            }
            s.counts[id] = value.get<std::uint64_t>();
        }
        corpus.samples.push_back(std::move(s));
    }
    return corpus;
}

void save_corpus(const Corpus& corpus, const fs::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << corpus_to_json(corpus) << '\n';
}

Corpus load_corpus(const fs::path& path) {
    return corpus_from_json(read_file(path));
}

}  // namespace malgroup
