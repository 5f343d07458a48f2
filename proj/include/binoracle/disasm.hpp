#pragma once

#include "binoracle/container.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace binoracle {

enum class Flow { sequential, jump, cond_jump, call, ret, halt, invalid };

const char* flow_name(Flow f);
std::optional<Flow> flow_from_name(const std::string& name);

enum class OperandKind { reg, imm, mem };

struct Operand {
    OperandKind kind = OperandKind::reg;
    uint8_t width = 8; // bytes

    std::string reg; // kind == reg

    int64_t imm = 0; // kind == imm

    // kind == mem: [base + index*scale + disp], any part optional.
    std::string base;
    std::string index;
    int scale = 1;
    int64_t disp = 0;
    bool rip_relative = false;

    static Operand make_reg(std::string name, uint8_t width);
    static Operand make_imm(int64_t value, uint8_t width);
};

struct Instruction {
    uint64_t va = 0;
    uint8_t length = 1;
    std::string mnemonic;
    std::vector<Operand> operands;
    Flow flow = Flow::sequential;
    std::optional<uint64_t> static_target; // direct jump/cond_jump/call only

    // Absolute address of a RIP-relative memory operand, when present.
    std::optional<uint64_t> rip_target() const;
};

// Total function: every byte window decodes to some Instruction; unknown
// encodings yield flow=invalid with length 1.
Instruction decode_instruction(const uint8_t* bytes, size_t len, uint64_t va);

// Decodes from section start, resuming after each instruction (1 byte after
// an invalid one). Requires an executable initialized section.
std::vector<Instruction> linear_sweep(const Section& section);

// Textual fixture listings: `VA: MNEMONIC [operands] ; flow=KIND [target=VA]`
// with `#` comments. Errors: FixtureSyntax with the line number.
std::vector<Instruction> parse_fixture(const std::string& text);
std::string render_fixture(const std::vector<Instruction>& instructions);

// Register name helpers shared with the lifter.
// Canonical 64-bit register for any GPR alias ("eax" -> "rax"); empty if the
// name is not a GPR alias.
std::string canonical_register(const std::string& name);
uint8_t register_width(const std::string& name);

} // namespace binoracle
