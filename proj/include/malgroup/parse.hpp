#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace malgroup {

struct ParseResult {
    std::vector<std::string> mnemonics;  // lowercased, in file order
    std::size_t malformed_lines = 0;     // tallied in lenient mode only
};

/// Extracts the mnemonic of every instruction line of a disassembly
/// listing. An instruction line is `<hex-addr>:` followed by one or more
/// hex byte pairs and a mnemonic; anything else (labels, section headers,
/// blank lines) is skipped. Prefix tokens (lock, rep, repz, repnz, repe,
/// repne) are emitted as mnemonics in their own right, followed by the
/// prefixed instruction's mnemonic.
///
/// In strict mode a line that starts like an instruction but cannot be
/// parsed throws std::runtime_error; in lenient mode it is skipped and
/// counted in `malformed_lines`.
ParseResult parse_disassembly(std::string_view text, bool strict = false);

}  // namespace malgroup
