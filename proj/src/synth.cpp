#include "malgroup/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace malgroup {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t sample_seed(std::uint64_t seed, const FamilySpec& spec, int index) {
    return splitmix64(seed ^ splitmix64(fnv1a(spec.name)) ^
                      splitmix64(static_cast<std::uint64_t>(index) * 0x2545f4914f6cdd1dULL));
}

// Inverse-CDF draw over cumulative weights; stable across standard
// library implementations.
std::size_t draw_index(const std::vector<double>& cumulative, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, cumulative.back());
    double u = uni(rng);
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

}  // namespace

std::vector<SynthSample> generate_samples(const std::vector<FamilySpec>& specs,
                                          std::uint64_t seed) {
    if (specs.empty()) throw std::invalid_argument("no family specs");
    std::set<std::string> names;
    bool has_malware = false, has_benign = false;
    for (const FamilySpec& spec : specs) {
        if (!names.insert(spec.name).second) {
            throw std::invalid_argument("duplicate family name: " + spec.name);
        }
        if (spec.count < 1) throw std::invalid_argument("family count must be >= 1: " + spec.name);
        if (spec.size_stddev < 0) throw std::invalid_argument("negative size stddev: " + spec.name);
        if (spec.opcode_profile.empty()) {
            throw std::invalid_argument("empty opcode profile: " + spec.name);
        }
        for (const auto& [mnemonic, weight] : spec.opcode_profile) {
            if (weight <= 0) throw std::invalid_argument("non-positive weight in " + spec.name);
        }
        (spec.label == Label::malware ? has_malware : has_benign) = true;
    }
    if (!has_malware || !has_benign) {
        throw std::invalid_argument("need at least one malware and one benign family");
    }

    std::vector<SynthSample> samples;
    for (const FamilySpec& raw_spec : specs) {
        // Sampling order is normalized so a spec and its JSON round trip
        // generate identical datasets.
        FamilySpec spec = raw_spec;
        std::sort(spec.opcode_profile.begin(), spec.opcode_profile.end());
        std::vector<double> cumulative;
        cumulative.reserve(spec.opcode_profile.size());
        double total = 0.0;
        for (const auto& [mnemonic, weight] : spec.opcode_profile) {
            total += weight;
            cumulative.push_back(total);
        }
        for (int i = 0; i < spec.count; ++i) {
            std::mt19937_64 rng(sample_seed(seed, spec, i));
            std::normal_distribution<double> size_dist(spec.size_mean, spec.size_stddev);
            double raw = spec.size_stddev > 0 ? size_dist(rng) : spec.size_mean;
            SynthSample sample;
            sample.label = spec.label;
            sample.size_bytes = static_cast<std::uint64_t>(std::llround(std::max(raw, 1.0)));

            std::poisson_distribution<int> length_dist(spec.length_mean);
            int length = std::max(1, length_dist(rng));
            sample.tokens.reserve(static_cast<std::size_t>(length));
            for (int t = 0; t < length; ++t) {
                sample.tokens.push_back(spec.opcode_profile[draw_index(cumulative, rng)].first);
            }

            std::ostringstream name;
            name << to_string(spec.label) << '/' << spec.name << '_';
            name.width(4);
            name.fill('0');
            name << i;
            sample.rel_path = name.str() + ".asm";
            samples.push_back(std::move(sample));
        }
    }
    return samples;
}

std::string render_listing(const SynthSample& sample) {
    std::ostringstream out;
    out << "\nsample.bin:     file format elf64-x86-64\n\n";
    out << "Disassembly of section .text:\n\n";
    out << "0000000000401000 <.text>:\n";
    std::uint64_t addr = 0x401000;
    for (const std::string& token : sample.tokens) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "  %llx:\t%02x \t", static_cast<unsigned long long>(addr),
                      static_cast<unsigned>((addr * 7 + token.size()) & 0xff));
        out << buf << token << '\n';
        addr += 2;
    }
    return out.str();
}

void generate(const std::vector<FamilySpec>& specs, std::uint64_t seed, const fs::path& out_root) {
    std::vector<SynthSample> samples = generate_samples(specs, seed);
    fs::create_directories(out_root / "malware");
    fs::create_directories(out_root / "benign");

    std::sort(samples.begin(), samples.end(),
              [](const SynthSample& a, const SynthSample& b) { return a.rel_path < b.rel_path; });

    std::ofstream manifest(out_root / "manifest.tsv", std::ios::binary);
    if (!manifest) throw std::runtime_error("cannot write manifest under " + out_root.string());
    for (const SynthSample& sample : samples) {
        std::ofstream out(out_root / sample.rel_path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + sample.rel_path);
        out << render_listing(sample);
        manifest << sample.rel_path << '\t' << sample.size_bytes << '\n';
    }
}

namespace {

const std::vector<std::string>& shared_pool() {
    static const std::vector<std::string> pool = {
        "add",  "and",  "call", "cmp", "dec", "div", "imul", "inc",
        "ja",   "jae",  "jb",   "jbe", "je",  "jg",  "jge",  "jl",
        "jle",  "jmp",  "jne",  "lea", "mov", "movzx", "mul", "neg",
        "nop",  "not",  "or",   "pop", "push", "ret", "sar",  "shl"};
    return pool;
}

const std::vector<std::string>& marker_pool() {
    static const std::vector<std::string> pool = {
        "xor", "int3", "rdtsc", "cpuid", "pusha", "popa", "sidt", "sgdt"};
    return pool;
}

FamilySpec make_family(std::string name, Label label, double size_mean, double size_stddev,
                       const std::vector<std::string>& hot_markers, int count) {
    FamilySpec spec;
    spec.name = std::move(name);
    spec.label = label;
    spec.size_mean = size_mean;
    spec.size_stddev = size_stddev;
    spec.length_mean = 300;
    spec.count = count;
    double base = 1.0;
    for (std::size_t i = 0; i < shared_pool().size(); ++i) {
        // Mild per-opcode variation so families are not identical on the
        // shared pool either.
        double weight = base * (0.6 + 0.05 * static_cast<double>((i * 7 + spec.name.size()) % 16));
        spec.opcode_profile.emplace_back(shared_pool()[i], weight);
    }
    for (const std::string& marker : marker_pool()) {
        bool hot = std::find(hot_markers.begin(), hot_markers.end(), marker) != hot_markers.end();
        spec.opcode_profile.emplace_back(marker, hot ? 2.5 : 0.02);
    }
    return spec;
}

}  // namespace

std::vector<FamilySpec> default_scenario() {
    std::vector<FamilySpec> specs;
    specs.push_back(make_family("kit1", Label::malware, 20000, 200, {"xor", "int3", "rdtsc"}, 150));
    specs.push_back(make_family("kit2", Label::malware, 60000, 300, {"cpuid", "pusha", "popa"}, 120));
    specs.push_back(make_family("kit3", Label::malware, 200000, 500, {"sidt", "sgdt", "xor"}, 100));
    specs.push_back(make_family("util", Label::benign, 40000, 300, {}, 80));
    specs.push_back(make_family("apps", Label::benign, 120000, 400, {}, 70));
    return specs;
}

std::vector<FamilySpec> family_specs_from_json(const std::string& text) {
    json j = json::parse(text);
    std::vector<FamilySpec> specs;
    for (const json& js : j.at("families")) {
        FamilySpec spec;
        spec.name = js.at("name").get<std::string>();
        spec.label = label_from_string(js.at("label").get<std::string>());
        spec.size_mean = js.at("size_mean").get<double>();
        spec.size_stddev = js.at("size_stddev").get<double>();
        spec.length_mean = js.at("length_mean").get<double>();
        spec.count = js.at("count").get<int>();
        for (const auto& [mnemonic, weight] : js.at("opcode_profile").items()) {
            spec.opcode_profile.emplace_back(mnemonic, weight.get<double>());
        }
        std::sort(spec.opcode_profile.begin(), spec.opcode_profile.end());
        specs.push_back(std::move(spec));
    }
    return specs;
}

std::string family_specs_to_json(const std::vector<FamilySpec>& specs) {
    json families = json::array();
    for (const FamilySpec& spec : specs) {
        json profile = json::object();
        for (const auto& [mnemonic, weight] : spec.opcode_profile) profile[mnemonic] = weight;
        families.push_back({{"name", spec.name},
                            {"label", to_string(spec.label)},
                            {"size_mean", spec.size_mean},
                            {"size_stddev", spec.size_stddev},
                            {"length_mean", spec.length_mean},
                            {"count", spec.count},
                            {"opcode_profile", std::move(profile)}});
    }
    return json{{"families", std::move(families)}}.dump(2);
}

}  // namespace malgroup
