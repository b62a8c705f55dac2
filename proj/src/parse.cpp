#include "malgroup/parse.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace malgroup {

namespace {

constexpr std::array<std::string_view, 6> kPrefixes = {
    "lock", "rep", "repz", "repnz", "repe", "repne"};

bool is_hex(char c) {
    return std::isxdigit(static_cast<unsigned char>(c)) != 0;
}

bool all_hex(std::string_view s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), is_hex);
}

bool is_byte_pair(std::string_view s) {
    return s.size() == 2 && all_hex(s);
}

bool is_mnemonic_token(std::string_view s) {
    if (s.empty() || std::isalpha(static_cast<unsigned char>(s[0])) == 0) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '.' || c == '_';
    });
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

}  // namespace

ParseResult parse_disassembly(std::string_view text, bool strict) {
    ParseResult result;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? text.size() - pos : eol - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;

        auto tokens = split_ws(line);
        // Instruction candidate: first token is `<hex>:`.
        bool candidate = !tokens.empty() && tokens[0].size() >= 2 && tokens[0].back() == ':' &&
                         all_hex(tokens[0].substr(0, tokens[0].size() - 1));
        if (candidate) {
            std::size_t t = 1;
            while (t < tokens.size() && is_byte_pair(tokens[t])) ++t;
            bool have_bytes = t > 1;
            if (!have_bytes || (t < tokens.size() && !is_mnemonic_token(tokens[t]))) {
                if (strict) {
                    throw std::runtime_error("malformed instruction line " + std::to_string(line_no) +
                                             ": " + std::string(line));
                }
                ++result.malformed_lines;
            } else if (t < tokens.size()) {
                std::string mnemonic = to_lower(tokens[t]);
                while (std::find(kPrefixes.begin(), kPrefixes.end(), mnemonic) != kPrefixes.end()) {
                    result.mnemonics.push_back(mnemonic);
                    ++t;
                    if (t >= tokens.size() || !is_mnemonic_token(tokens[t])) {
                        mnemonic.clear();
                        break;
                    }
                    mnemonic = to_lower(tokens[t]);
                }
                if (!mnemonic.empty()) result.mnemonics.push_back(mnemonic);
            }
            // A candidate with bytes and no further tokens is an overflow
            // byte line of the previous instruction; not an error.
        }

        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    return result;
}

}  // namespace malgroup
