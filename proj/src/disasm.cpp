#include "binoracle/disasm.hpp"

#include "binoracle/error.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <map>
#include <sstream>

namespace binoracle {
namespace {

const char* kReg64[16] = {"rax", "rcx", "rdx", "rbx", "rsp", "rbp", "rsi", "rdi",
                          "r8",  "r9",  "r10", "r11", "r12", "r13", "r14", "r15"};
const char* kReg32[16] = {"eax", "ecx", "edx", "ebx", "esp", "ebp", "esi", "edi",
                          "r8d", "r9d", "r10d", "r11d", "r12d", "r13d", "r14d", "r15d"};
const char* kReg16[16] = {"ax",  "cx",  "dx",  "bx",  "sp",  "bp",  "si",  "di",
                          "r8w", "r9w", "r10w", "r11w", "r12w", "r13w", "r14w", "r15w"};
const char* kReg8Rex[16] = {"al",  "cl",  "dl",  "bl",  "spl", "bpl", "sil", "dil",
                            "r8b", "r9b", "r10b", "r11b", "r12b", "r13b", "r14b", "r15b"};
const char* kReg8[8] = {"al", "cl", "dl", "bl", "ah", "ch", "dh", "bh"};

std::string reg_name(unsigned idx, uint8_t width, bool rex_present) {
    idx &= 15;
    switch (width) {
        case 8: return kReg64[idx];
        case 4: return kReg32[idx];
        case 2: return kReg16[idx];
        case 1: return rex_present || idx >= 8 ? kReg8Rex[idx] : kReg8[idx & 7];
        default: return kReg64[idx];
    }
}

const char* kCondNames[16] = {"jo", "jno", "jb", "jae", "jz", "jnz", "jbe", "ja",
                              "js", "jns", "jp", "jnp", "jl", "jge", "jle", "jg"};

// Streaming decoder state over one instruction window.
struct Cursor {
    const uint8_t* bytes;
    size_t len;
    size_t pos = 0;
    bool ok = true;

    uint8_t u8() {
        if (pos >= len) {
            ok = false;
            return 0;
        }
        return bytes[pos++];
    }
    uint8_t peek() const { return pos < len ? bytes[pos] : 0; }
    int32_t i32() {
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(u8()) << (8 * i);
        return static_cast<int32_t>(v);
    }
    int16_t i16() {
        uint16_t v = static_cast<uint16_t>(u8());
        v |= static_cast<uint16_t>(u8()) << 8;
        return static_cast<int16_t>(v);
    }
    int64_t i64() {
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(u8()) << (8 * i);
        return static_cast<int64_t>(v);
    }
    int8_t i8() { return static_cast<int8_t>(u8()); }
};

struct Prefixes {
    bool rex = false;
    bool rex_w = false, rex_r = false, rex_x = false, rex_b = false;
    bool opsize = false; // 0x66
};

struct ModRm {
    uint8_t mod, reg, rm;
    Operand rm_operand; // memory or register
};

ModRm decode_modrm(Cursor& c, const Prefixes& p, uint8_t op_width) {
    ModRm m{};
    uint8_t byte = c.u8();
    m.mod = byte >> 6;
    m.reg = ((byte >> 3) & 7) | (p.rex_r ? 8 : 0);
    m.rm = (byte & 7) | (p.rex_b ? 8 : 0);

    if (m.mod == 3) {
        m.rm_operand = Operand::make_reg(reg_name(m.rm, op_width, p.rex), op_width);
        return m;
    }

    Operand mem;
    mem.kind = OperandKind::mem;
    mem.width = op_width;
    uint8_t rm_low = byte & 7;
    if (rm_low == 4) { // SIB
        uint8_t sib = c.u8();
        uint8_t scale_bits = sib >> 6;
        uint8_t index = ((sib >> 3) & 7) | (p.rex_x ? 8 : 0);
        uint8_t base = (sib & 7) | (p.rex_b ? 8 : 0);
        mem.scale = 1 << scale_bits;
        if (index != 4) mem.index = kReg64[index]; // index rsp means "none"
        if ((base & 7) == 5 && m.mod == 0) {
            mem.disp = c.i32(); // no base, disp32
        } else {
            mem.base = kReg64[base];
        }
    } else if (rm_low == 5 && m.mod == 0) {
        mem.rip_relative = true;
        mem.disp = c.i32();
    } else {
        mem.base = kReg64[m.rm];
    }
    if (m.mod == 1) mem.disp = c.i8();
    if (m.mod == 2) mem.disp = c.i32();
    m.rm_operand = mem;
    return m;
}

Instruction invalid_at(uint64_t va) {
    Instruction insn;
    insn.va = va;
    insn.length = 1;
    insn.mnemonic = "(bad)";
    insn.flow = Flow::invalid;
    return insn;
}

} // namespace

const char* flow_name(Flow f) {
    switch (f) {
        case Flow::sequential: return "sequential";
        case Flow::jump: return "jump";
        case Flow::cond_jump: return "cond_jump";
        case Flow::call: return "call";
        case Flow::ret: return "ret";
        case Flow::halt: return "halt";
        case Flow::invalid: return "invalid";
    }
    return "invalid";
}

std::optional<Flow> flow_from_name(const std::string& name) {
    static const std::map<std::string, Flow> table = {
        {"sequential", Flow::sequential}, {"jump", Flow::jump},
        {"cond_jump", Flow::cond_jump},   {"call", Flow::call},
        {"ret", Flow::ret},               {"halt", Flow::halt},
        {"invalid", Flow::invalid},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

Operand Operand::make_reg(std::string name, uint8_t width) {
    Operand op;
    op.kind = OperandKind::reg;
    op.reg = std::move(name);
    op.width = width;
    return op;
}

Operand Operand::make_imm(int64_t value, uint8_t width) {
    Operand op;
    op.kind = OperandKind::imm;
    op.imm = value;
    op.width = width;
    return op;
}

std::optional<uint64_t> Instruction::rip_target() const {
    for (const auto& op : operands) {
        if (op.kind == OperandKind::mem && op.rip_relative) {
            return va + length + static_cast<uint64_t>(op.disp);
        }
    }
    return std::nullopt;
}

std::string canonical_register(const std::string& name) {
    for (unsigned i = 0; i < 16; ++i) {
        if (name == kReg64[i] || name == kReg32[i] || name == kReg16[i] ||
            name == kReg8Rex[i]) {
            return kReg64[i];
        }
    }
    static const std::map<std::string, std::string> high = {
        {"ah", "rax"}, {"ch", "rcx"}, {"dh", "rdx"}, {"bh", "rbx"}};
    auto it = high.find(name);
    return it != high.end() ? it->second : "";
}

uint8_t register_width(const std::string& name) {
    for (unsigned i = 0; i < 16; ++i) {
        if (name == kReg64[i]) return 8;
        if (name == kReg32[i]) return 4;
        if (name == kReg16[i]) return 2;
        if (name == kReg8Rex[i]) return 1;
    }
    if (canonical_register(name).size()) return 1; // ah/ch/dh/bh
    return 0;
}

Instruction decode_instruction(const uint8_t* bytes, size_t len, uint64_t va) {
    if (len == 0) return invalid_at(va);
    Cursor c{bytes, std::min<size_t>(len, 15)};
    Prefixes p;

    // Legacy + REX prefixes. F2/F3 and segment overrides are consumed and
    // ignored (rep ret, cs-padded nops).
    for (;;) {
        uint8_t b = c.peek();
        if (b == 0x66) {
            p.opsize = true;
            c.u8();
        } else if (b == 0xF2 || b == 0xF3 || b == 0x2E || b == 0x3E || b == 0x26 ||
                   b == 0x36 || b == 0x64 || b == 0x65) {
            c.u8();
        } else {
            break;
        }
        if (c.pos >= c.len) return invalid_at(va);
    }
    if ((c.peek() & 0xF0) == 0x40) {
        uint8_t rex = c.u8();
        p.rex = true;
        p.rex_w = rex & 8;
        p.rex_r = rex & 4;
        p.rex_x = rex & 2;
        p.rex_b = rex & 1;
    }

    uint8_t op_width = p.rex_w ? 8 : (p.opsize ? 2 : 4);

    Instruction insn;
    insn.va = va;
    insn.flow = Flow::sequential;

    auto finish = [&]() {
        if (!c.ok || c.pos == 0) return invalid_at(va);
        insn.length = static_cast<uint8_t>(c.pos);
        return insn;
    };
    auto rel_target = [&](int64_t rel) {
        // length must be final before computing the target
        insn.static_target = va + c.pos + static_cast<uint64_t>(rel);
    };

    uint8_t op = c.u8();
    if (!c.ok) return invalid_at(va);

    // Group 1 arithmetic: 00..3B pattern (op r/m,r | op r,r/m), low 3 bits
    // select direction/width.
    static const std::map<uint8_t, const char*> arith_base = {
        {0x00, "add"}, {0x08, "or"}, {0x20, "and"}, {0x28, "sub"},
        {0x30, "xor"}, {0x38, "cmp"}};
    uint8_t base = op & 0xF8;
    uint8_t low = op & 7;
    if (arith_base.count(base) && low <= 3) {
        uint8_t width = (low & 1) ? op_width : 1;
        bool reg_is_dest = low & 2;
        ModRm m = decode_modrm(c, p, width);
        Operand reg_op = Operand::make_reg(reg_name(m.reg, width, p.rex), width);
        insn.mnemonic = arith_base.at(base);
        if (reg_is_dest) {
            insn.operands = {reg_op, m.rm_operand};
        } else {
            insn.operands = {m.rm_operand, reg_op};
        }
        return finish();
    }

    switch (op) {
        case 0x0F: { // two-byte opcodes
            uint8_t op2 = c.u8();
            if (!c.ok) return invalid_at(va);
            if (op2 == 0x0B) { // defined-undefined opcode: decodes, kills flow
                insn.mnemonic = "ud2";
                insn.flow = Flow::invalid;
                return finish();
            }
            if (op2 == 0x1F) { // multi-byte nop
                ModRm m = decode_modrm(c, p, op_width);
                insn.mnemonic = "nop";
                insn.operands = {m.rm_operand};
                return finish();
            }
            if (op2 >= 0x80 && op2 <= 0x8F) { // jcc rel32
                insn.mnemonic = kCondNames[op2 - 0x80];
                insn.flow = Flow::cond_jump;
                int32_t rel = c.i32();
                if (!c.ok) return invalid_at(va);
                rel_target(rel);
                return finish();
            }
            if (op2 == 0xAF) { // imul r, r/m
                ModRm m = decode_modrm(c, p, op_width);
                insn.mnemonic = "imul";
                insn.operands = {Operand::make_reg(reg_name(m.reg, op_width, p.rex), op_width),
                                 m.rm_operand};
                return finish();
            }
            if (op2 == 0xB6 || op2 == 0xB7 || op2 == 0xBE || op2 == 0xBF) {
                uint8_t src_width = (op2 & 1) ? 2 : 1;
                ModRm m = decode_modrm(c, p, src_width);
                insn.mnemonic = (op2 < 0xBE) ? "movzx" : "movsx";
                insn.operands = {Operand::make_reg(reg_name(m.reg, op_width, p.rex), op_width),
                                 m.rm_operand};
                return finish();
            }
            return invalid_at(va);
        }

        case 0x63: { // movsxd r64, r/m32
            ModRm m = decode_modrm(c, p, 4);
            insn.mnemonic = "movsxd";
            insn.operands = {Operand::make_reg(reg_name(m.reg, p.rex_w ? 8 : 4, p.rex),
                                               p.rex_w ? 8 : 4),
                             m.rm_operand};
            return finish();
        }

        case 0x69:
        case 0x6B: { // imul r, r/m, imm
            ModRm m = decode_modrm(c, p, op_width);
            int64_t imm = (op == 0x6B) ? c.i8() : c.i32();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "imul";
            insn.operands = {Operand::make_reg(reg_name(m.reg, op_width, p.rex), op_width),
                             m.rm_operand, Operand::make_imm(imm, op_width)};
            return finish();
        }

        case 0x80:
        case 0x81:
        case 0x83: { // group 1 with immediate
            uint8_t width = (op == 0x80) ? 1 : op_width;
            ModRm m = decode_modrm(c, p, width);
            static const char* names[8] = {"add", "or", "adc", "sbb",
                                           "and", "sub", "xor", "cmp"};
            uint8_t sel = m.reg & 7;
            if (sel == 2 || sel == 3) return invalid_at(va); // adc/sbb out of subset
            int64_t imm = (op == 0x81) ? c.i32() : c.i8();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = names[sel];
            insn.operands = {m.rm_operand, Operand::make_imm(imm, width)};
            return finish();
        }

        case 0x84:
        case 0x85: { // test r/m, r
            uint8_t width = (op == 0x85) ? op_width : 1;
            ModRm m = decode_modrm(c, p, width);
            insn.mnemonic = "test";
            insn.operands = {m.rm_operand,
                             Operand::make_reg(reg_name(m.reg, width, p.rex), width)};
            return finish();
        }

        case 0x88:
        case 0x89:
        case 0x8A:
        case 0x8B: { // mov
            uint8_t width = (op & 1) ? op_width : 1;
            bool reg_is_dest = op & 2;
            ModRm m = decode_modrm(c, p, width);
            Operand reg_op = Operand::make_reg(reg_name(m.reg, width, p.rex), width);
            insn.mnemonic = "mov";
            if (reg_is_dest) {
                insn.operands = {reg_op, m.rm_operand};
            } else {
                insn.operands = {m.rm_operand, reg_op};
            }
            return finish();
        }

        case 0x8D: { // lea
            ModRm m = decode_modrm(c, p, op_width);
            if (m.mod == 3) return invalid_at(va);
            insn.mnemonic = "lea";
            insn.operands = {Operand::make_reg(reg_name(m.reg, op_width, p.rex), op_width),
                             m.rm_operand};
            return finish();
        }

        case 0x90:
            insn.mnemonic = "nop";
            return finish();

        case 0xC2: { // ret imm16
            int16_t imm = c.i16();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "ret";
            insn.operands = {Operand::make_imm(imm, 2)};
            insn.flow = Flow::ret;
            return finish();
        }
        case 0xC3:
            insn.mnemonic = "ret";
            insn.flow = Flow::ret;
            return finish();

        case 0xC6:
        case 0xC7: { // mov r/m, imm
            uint8_t width = (op == 0xC7) ? op_width : 1;
            ModRm m = decode_modrm(c, p, width);
            if (m.reg & 7) return invalid_at(va);
            int64_t imm = (op == 0xC7) ? c.i32() : c.i8();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "mov";
            insn.operands = {m.rm_operand, Operand::make_imm(imm, width)};
            return finish();
        }

        case 0xC9:
            insn.mnemonic = "leave";
            return finish();

        case 0xCC:
            insn.mnemonic = "int3";
            insn.flow = Flow::halt;
            return finish();
        case 0xF4:
            insn.mnemonic = "hlt";
            insn.flow = Flow::halt;
            return finish();

        case 0xC0:
        case 0xC1:
        case 0xD1:
        case 0xD3: { // shift group
            uint8_t width = (op == 0xC0) ? 1 : op_width;
            ModRm m = decode_modrm(c, p, width);
            static const char* names[8] = {"rol", "ror", "rcl", "rcr",
                                           "shl", "shr", "shl", "sar"};
            uint8_t sel = m.reg & 7;
            if (sel < 4) return invalid_at(va); // rotates out of subset
            insn.mnemonic = names[sel];
            insn.operands = {m.rm_operand};
            if (op == 0xC0 || op == 0xC1) {
                int64_t imm = c.u8();
                if (!c.ok) return invalid_at(va);
                insn.operands.push_back(Operand::make_imm(imm, 1));
            } else if (op == 0xD1) {
                insn.operands.push_back(Operand::make_imm(1, 1));
            } else {
                insn.operands.push_back(Operand::make_reg("cl", 1));
            }
            return finish();
        }

        case 0xE8: { // call rel32
            int32_t rel = c.i32();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "call";
            insn.flow = Flow::call;
            rel_target(rel);
            return finish();
        }
        case 0xE9: { // jmp rel32
            int32_t rel = c.i32();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "jmp";
            insn.flow = Flow::jump;
            rel_target(rel);
            return finish();
        }
        case 0xEB: { // jmp rel8
            int8_t rel = c.i8();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "jmp";
            insn.flow = Flow::jump;
            rel_target(rel);
            return finish();
        }

        case 0xF6:
        case 0xF7: { // group 3 (test only)
            uint8_t width = (op == 0xF7) ? op_width : 1;
            ModRm m = decode_modrm(c, p, width);
            if ((m.reg & 7) != 0) return invalid_at(va);
            int64_t imm = (op == 0xF7) ? c.i32() : c.i8();
            if (!c.ok) return invalid_at(va);
            insn.mnemonic = "test";
            insn.operands = {m.rm_operand, Operand::make_imm(imm, width)};
            return finish();
        }

        case 0xFE: { // inc/dec r/m8
            ModRm m = decode_modrm(c, p, 1);
            uint8_t sel = m.reg & 7;
            if (sel > 1) return invalid_at(va);
            insn.mnemonic = sel == 0 ? "inc" : "dec";
            insn.operands = {m.rm_operand};
            return finish();
        }
        case 0xFF: { // group 5
            ModRm m = decode_modrm(c, p, op_width);
            switch (m.reg & 7) {
                case 0:
                case 1:
                    insn.mnemonic = (m.reg & 7) == 0 ? "inc" : "dec";
                    insn.operands = {m.rm_operand};
                    return finish();
                case 2:
                    insn.mnemonic = "call";
                    insn.flow = Flow::call;
                    if (m.mod == 3) {
                        m.rm_operand = Operand::make_reg(reg_name(m.rm, 8, p.rex), 8);
                    } else {
                        m.rm_operand.width = 8;
                    }
                    insn.operands = {m.rm_operand};
                    return finish();
                case 4:
                    insn.mnemonic = "jmp";
                    insn.flow = Flow::jump;
                    if (m.mod == 3) {
                        m.rm_operand = Operand::make_reg(reg_name(m.rm, 8, p.rex), 8);
                    } else {
                        m.rm_operand.width = 8;
                    }
                    insn.operands = {m.rm_operand};
                    return finish();
                case 6:
                    insn.mnemonic = "push";
                    m.rm_operand.width = 8;
                    insn.operands = {m.rm_operand};
                    return finish();
                default:
                    return invalid_at(va);
            }
        }

        default:
            break;
    }

    if (op >= 0x50 && op <= 0x57) {
        insn.mnemonic = "push";
        insn.operands = {Operand::make_reg(reg_name((op - 0x50) | (p.rex_b ? 8 : 0), 8, p.rex), 8)};
        return finish();
    }
    if (op >= 0x58 && op <= 0x5F) {
        insn.mnemonic = "pop";
        insn.operands = {Operand::make_reg(reg_name((op - 0x58) | (p.rex_b ? 8 : 0), 8, p.rex), 8)};
        return finish();
    }
    if (op >= 0x70 && op <= 0x7F) { // jcc rel8
        int8_t rel = c.i8();
        if (!c.ok) return invalid_at(va);
        insn.mnemonic = kCondNames[op - 0x70];
        insn.flow = Flow::cond_jump;
        rel_target(rel);
        return finish();
    }
    if (op >= 0xB8 && op <= 0xBF) { // mov r, imm
        unsigned reg = (op - 0xB8) | (p.rex_b ? 8 : 0);
        int64_t imm = p.rex_w ? c.i64() : c.i32();
        if (!c.ok) return invalid_at(va);
        insn.mnemonic = "mov";
        insn.operands = {Operand::make_reg(reg_name(reg, op_width, p.rex), op_width),
                         Operand::make_imm(imm, op_width)};
        return finish();
    }
    if (op == 0x68) { // push imm32
        int32_t imm = c.i32();
        if (!c.ok) return invalid_at(va);
        insn.mnemonic = "push";
        insn.operands = {Operand::make_imm(imm, 8)};
        return finish();
    }
    if (op == 0x6A) { // push imm8
        int8_t imm = c.i8();
        if (!c.ok) return invalid_at(va);
        insn.mnemonic = "push";
        insn.operands = {Operand::make_imm(imm, 8)};
        return finish();
    }

    return invalid_at(va);
}

std::vector<Instruction> linear_sweep(const Section& section) {
    std::vector<Instruction> out;
    if (!section.executable || !section.initialized) return out;
    const auto& bytes = section.bytes;
    size_t pos = 0;
    while (pos < bytes.size()) {
        Instruction insn =
            decode_instruction(bytes.data() + pos, bytes.size() - pos, section.va + pos);
        out.push_back(insn);
        pos += insn.length;
    }
    return out;
}

namespace {

int64_t parse_int(const std::string& tok, bool* ok) {
    *ok = false;
    if (tok.empty()) return 0;
    try {
        size_t used = 0;
        int64_t v;
        if (tok.size() > 2 && (tok.compare(0, 2, "0x") == 0 || tok.compare(0, 3, "-0x") == 0)) {
            v = static_cast<int64_t>(std::stoull(
                tok[0] == '-' ? tok.substr(3) : tok.substr(2), &used, 16));
            if (tok[0] == '-') v = -v;
            used += tok[0] == '-' ? 3 : 2;
        } else {
            v = std::stoll(tok, &used, 10);
        }
        if (used != tok.size()) return 0;
        *ok = true;
        return v;
    } catch (...) {
        return 0;
    }
}

Operand parse_operand_text(const std::string& text, int line_no) {
    std::string t = text;
    auto syntax = [&](const std::string& why) {
        fail("FixtureSyntax", "line " + std::to_string(line_no) + ": " + why + " in operand \"" +
                                  text + "\"");
    };
    if (t.empty()) syntax("empty operand");
    if (t.front() == '[') {
        if (t.back() != ']') syntax("unterminated memory operand");
        Operand mem;
        mem.kind = OperandKind::mem;
        mem.width = 8;
        std::string inner = t.substr(1, t.size() - 2);
        // split on +/- keeping sign for displacement
        size_t start = 0;
        bool neg = false;
        auto flush = [&](const std::string& part, bool negative) {
            if (part.empty()) return;
            size_t star = part.find('*');
            bool ok = false;
            if (star != std::string::npos) {
                mem.index = part.substr(0, star);
                int64_t scale = parse_int(part.substr(star + 1), &ok);
                if (!ok || (scale != 1 && scale != 2 && scale != 4 && scale != 8)) {
                    syntax("bad scale");
                }
                mem.scale = static_cast<int>(scale);
                return;
            }
            int64_t v = parse_int(part, &ok);
            if (ok) {
                mem.disp = negative ? -v : v;
                return;
            }
            if (part == "rip") {
                mem.rip_relative = true;
                return;
            }
            if (mem.base.empty()) {
                mem.base = part;
            } else if (mem.index.empty()) {
                mem.index = part;
            } else {
                syntax("too many registers");
            }
        };
        for (size_t i = 0; i <= inner.size(); ++i) {
            if (i == inner.size() || inner[i] == '+' || inner[i] == '-') {
                flush(inner.substr(start, i - start), neg);
                neg = i < inner.size() && inner[i] == '-';
                start = i + 1;
            }
        }
        return mem;
    }
    bool ok = false;
    int64_t v = parse_int(t, &ok);
    if (ok) return Operand::make_imm(v, 8);
    uint8_t w = register_width(t);
    if (w == 0) syntax("unknown register");
    Operand reg = Operand::make_reg(t, w);
    return reg;
}

std::string render_operand_text(const Operand& op) {
    std::ostringstream out;
    switch (op.kind) {
        case OperandKind::reg:
            out << op.reg;
            break;
        case OperandKind::imm:
            if (op.imm < 0) {
                out << "-0x" << std::hex << -op.imm;
            } else {
                out << "0x" << std::hex << op.imm;
            }
            break;
        case OperandKind::mem: {
            out << "[";
            bool first = true;
            if (op.rip_relative) {
                out << "rip";
                first = false;
            }
            if (!op.base.empty()) {
                out << op.base;
                first = false;
            }
            if (!op.index.empty()) {
                if (!first) out << "+";
                out << op.index << "*" << op.scale;
                first = false;
            }
            if (op.disp != 0 || first) {
                if (op.disp < 0) {
                    out << "-0x" << std::hex << -op.disp;
                } else {
                    if (!first) out << "+";
                    out << "0x" << std::hex << op.disp;
                }
            }
            out << "]";
            break;
        }
    }
    return out.str();
}

} // namespace

std::vector<Instruction> parse_fixture(const std::string& text) {
    std::vector<Instruction> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    auto syntax = [&](const std::string& why) {
        fail("FixtureSyntax", "line " + std::to_string(line_no) + ": " + why);
    };
    while (std::getline(in, line)) {
        ++line_no;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto notspace = [](unsigned char ch) { return !std::isspace(ch); };
        line.erase(line.begin(), std::find_if(line.begin(), line.end(), notspace));
        line.erase(std::find_if(line.rbegin(), line.rend(), notspace).base(), line.end());
        if (line.empty()) continue;

        size_t colon = line.find(':');
        if (colon == std::string::npos) syntax("missing \"VA:\" prefix");
        bool ok = false;
        int64_t va = parse_int(line.substr(0, colon), &ok);
        if (!ok) syntax("bad VA \"" + line.substr(0, colon) + "\"");

        size_t semi = line.find(';', colon);
        if (semi == std::string::npos) syntax("missing \"; flow=\" clause");
        std::string body = line.substr(colon + 1, semi - colon - 1);
        std::string meta = line.substr(semi + 1);

        Instruction insn;
        insn.va = static_cast<uint64_t>(va);
        insn.length = 1;

        std::istringstream bodyin(body);
        bodyin >> insn.mnemonic;
        if (insn.mnemonic.empty()) syntax("missing mnemonic");
        std::string rest;
        std::getline(bodyin, rest);
        // operands are comma separated
        std::string current;
        auto flush_operand = [&]() {
            std::string t = current;
            t.erase(std::remove_if(t.begin(), t.end(),
                                   [](unsigned char ch) { return std::isspace(ch); }),
                    t.end());
            if (!t.empty()) insn.operands.push_back(parse_operand_text(t, line_no));
            current.clear();
        };
        for (char ch : rest) {
            if (ch == ',') {
                flush_operand();
            } else {
                current.push_back(ch);
            }
        }
        flush_operand();

        bool have_flow = false;
        std::istringstream metain(meta);
        std::string tok;
        while (metain >> tok) {
            if (tok.rfind("flow=", 0) == 0) {
                auto f = flow_from_name(tok.substr(5));
                if (!f) syntax("unknown flow kind \"" + tok.substr(5) + "\"");
                insn.flow = *f;
                have_flow = true;
            } else if (tok.rfind("target=", 0) == 0) {
                int64_t tgt = parse_int(tok.substr(7), &ok);
                if (!ok) syntax("bad target \"" + tok.substr(7) + "\"");
                insn.static_target = static_cast<uint64_t>(tgt);
            } else if (tok.rfind("len=", 0) == 0) {
                int64_t n = parse_int(tok.substr(4), &ok);
                if (!ok || n < 1 || n > 15) syntax("bad len \"" + tok.substr(4) + "\"");
                insn.length = static_cast<uint8_t>(n);
            } else {
                syntax("unexpected token \"" + tok + "\"");
            }
        }
        if (!have_flow) syntax("missing flow keyword");
        out.push_back(std::move(insn));
    }
    return out;
}

std::string render_fixture(const std::vector<Instruction>& instructions) {
    std::ostringstream out;
    for (const auto& insn : instructions) {
        out << "0x" << std::hex << insn.va << std::dec << ": " << insn.mnemonic;
        for (size_t i = 0; i < insn.operands.size(); ++i) {
            out << (i == 0 ? " " : ", ") << render_operand_text(insn.operands[i]);
        }
        out << " ; flow=" << flow_name(insn.flow);
        if (insn.static_target) {
            out << " target=0x" << std::hex << *insn.static_target << std::dec;
        }
        if (insn.length != 1) out << " len=" << static_cast<int>(insn.length);
        out << "\n";
    }
    return out.str();
}

} // namespace binoracle
