#include <doctest.h>


#include <stdexcept>
#include <random>

#include "malgroup/parse.hpp"

using malgroup::parse_disassembly;

TEST_CASE("plain instruction lines") {
    auto r = parse_disassembly("  4004d6: 55  push %rbp\n  4004d7: 90  nop");
    CHECK(r.mnemonics == std::vector<std::string>{"push", "nop"});
    CHECK(r.malformed_lines == 0);
}

TEST_CASE("label and header lines are skipped") {
    auto r = parse_disassembly(
        "sample.bin:     file format elf64-x86-64\n"
        "\n"
        "Disassembly of section .text:\n"
        "0000000000401000 <main>:\n"
        "  401000:\t48 89 e5\tmov %rsp,%rbp\n");
    CHECK(r.mnemonics == std::vector<std::string>{"mov"});
}

TEST_CASE("five line golden listing keeps file order") {
    auto r = parse_disassembly(
        "  401000:\t89 d8\tmov %ebx,%eax\n"
        "  401002:\t55\tpush %rbp\n"
        "\n"
        "Disassembly of section .data:\n"
        "  401003:\t8b 45 fc\tmov -0x4(%rbp),%eax\n");
    CHECK(r.mnemonics == std::vector<std::string>{"mov", "push", "mov"});
}

TEST_CASE("prefixes are emitted as their own mnemonics") {
    auto r = parse_disassembly(
        "  401000:\tf0 83 04 24 01\tlock addl $0x1,(%rsp)\n"
        "  401006:\tf3 c3\trepz ret\n"
        "  401008:\tf3 a4\trep movsb %ds:(%rsi),%es:(%rdi)\n");
    CHECK(r.mnemonics == std::vector<std::string>{"lock", "addl", "repz", "ret", "rep", "movsb"});
}

TEST_CASE("mnemonics are case folded") {
    auto r = parse_disassembly("  401000: 90  NOP\n  401002: 89 D8  MOV EAX, EBX\n");
    CHECK(r.mnemonics == std::vector<std::string>{"nop", "mov"});
}

TEST_CASE("byte overflow lines are not instructions") {
    auto r = parse_disassembly(
        "  401000:\te8 12 34 56 78\tcall 78563412\n"
        "  401005:\t00 00 00 00\n");
    CHECK(r.mnemonics == std::vector<std::string>{"call"});
    CHECK(r.malformed_lines == 0);
}

TEST_CASE("malformed lines: lenient skips and tallies, strict throws") {
    const char* text = "  401000: push %rbp\n  401001: 90  nop\n";
    auto r = parse_disassembly(text, /*strict=*/false);
    CHECK(r.mnemonics == std::vector<std::string>{"nop"});
    CHECK(r.malformed_lines == 1);
    CHECK_THROWS_AS(parse_disassembly(text, /*strict=*/true), std::runtime_error);
}

TEST_CASE("parsing is idempotent and order preserving") {
    std::mt19937_64 rng(7);
    const char* mnemonics[] = {"mov", "push", "pop", "xor", "call", "ret"};
    for (int trial = 0; trial < 20; ++trial) {
        std::string text;
        std::vector<std::string> expected;
        int lines = static_cast<int>(rng() % 30 + 1);
        for (int i = 0; i < lines; ++i) {
            switch (rng() % 4) {
                case 0: text += "\n"; break;
                case 1: text += "0000000000401000 <f>:\n"; break;
                default: {
                    const char* m = mnemonics[rng() % 6];
                    text += "  40" + std::to_string(i) + ": 90  " + m + "\n";
                    expected.push_back(m);
                }
            }
        }
        auto first = parse_disassembly(text);
        auto second = parse_disassembly(text);
        CHECK(first.mnemonics == expected);
        CHECK(first.mnemonics == second.mnemonics);
    }
}
