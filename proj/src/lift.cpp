#include "binoracle/lift.hpp"

#include "binoracle/error.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace binoracle {
namespace {

const char* const kOpcodeNames[] = {
    "COPY", "LOAD", "STORE",
    "INT_ADD", "INT_SUB", "INT_MULT", "INT_AND", "INT_OR", "INT_XOR",
    "INT_LEFT", "INT_RIGHT", "INT_SRIGHT",
    "INT_EQUAL", "INT_NOTEQUAL", "INT_LESS", "INT_SLESS", "INT_LESSEQUAL", "INT_SLESSEQUAL",
    "BOOL_NEGATE", "BOOL_AND", "BOOL_OR",
    "FLOAT_ADD", "FLOAT_SUB", "FLOAT_MULT", "FLOAT_DIV",
    "CALL", "CALLIND", "CBRANCH", "BRANCH", "BRANCHIND", "RETURN",
    "CAST", "SUBPIECE", "INT_ZEXT", "INT_SEXT", "PIECE", "PTRADD", "PTRSUB", "PHI",
};
constexpr int kOpcodeCount = sizeof(kOpcodeNames) / sizeof(kOpcodeNames[0]);

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

bool is_high_byte(const std::string& name) {
    return name == "ah" || name == "bh" || name == "ch" || name == "dh";
}

// type tag a load result carries when it lands in a temp
const char* load_type(int width) {
    switch (width) {
        case 8: return "longlong";
        case 4: return "int";
        case 2: return "short";
        case 1: return "char";
        default: return "";
    }
}

bool is_comparison(PcodeOpcode op) {
    switch (op) {
        case PcodeOpcode::INT_EQUAL:
        case PcodeOpcode::INT_NOTEQUAL:
        case PcodeOpcode::INT_LESS:
        case PcodeOpcode::INT_SLESS:
        case PcodeOpcode::INT_LESSEQUAL:
        case PcodeOpcode::INT_SLESSEQUAL:
            return true;
        default:
            return false;
    }
}

const char* comparison_symbol(PcodeOpcode op) {
    switch (op) {
        case PcodeOpcode::INT_EQUAL: return "==";
        case PcodeOpcode::INT_NOTEQUAL: return "!=";
        case PcodeOpcode::INT_SLESS: return "<";
        case PcodeOpcode::INT_SLESSEQUAL: return "<=";
        case PcodeOpcode::INT_LESS: return "<u";
        case PcodeOpcode::INT_LESSEQUAL: return "<=u";
        default: return "";
    }
}

bool is_branch_op(PcodeOpcode op) {
    return op == PcodeOpcode::BRANCH || op == PcodeOpcode::CBRANCH ||
           op == PcodeOpcode::BRANCHIND || op == PcodeOpcode::RETURN;
}

uint64_t width_mask(int width) {
    return width >= 8 ? ~0ULL : ((1ULL << (8 * width)) - 1);
}

// ------------------------------------------------------------- block lifting

// x86 condition -> synthesized comparison. `negate` wraps the comparison in
// BOOL_NEGATE; `flag` names the location the positive-sense value occupies.
struct CondSpec {
    PcodeOpcode cmp;
    bool negate;
    const char* flag; // empty -> unique temp
};

const std::map<std::string, CondSpec>& cond_table() {
    static const std::map<std::string, CondSpec> table = {
        {"jz", {PcodeOpcode::INT_EQUAL, false, "ZF"}},
        {"jnz", {PcodeOpcode::INT_NOTEQUAL, false, ""}},
        {"jb", {PcodeOpcode::INT_LESS, false, "CF"}},
        {"jae", {PcodeOpcode::INT_LESS, true, "CF"}},
        {"jbe", {PcodeOpcode::INT_LESSEQUAL, false, ""}},
        {"ja", {PcodeOpcode::INT_LESSEQUAL, true, ""}},
        {"jl", {PcodeOpcode::INT_SLESS, false, ""}},
        {"jge", {PcodeOpcode::INT_SLESS, true, ""}},
        {"jle", {PcodeOpcode::INT_SLESSEQUAL, false, ""}},
        {"jg", {PcodeOpcode::INT_SLESSEQUAL, true, ""}},
        {"js", {PcodeOpcode::INT_SLESS, false, "SF"}},
        {"jns", {PcodeOpcode::INT_SLESS, true, "SF"}},
    };
    return table;
}

class BlockLifter {
public:
    BlockLifter(const FunctionRecord& f, const Cfg& cfg, const BinaryImage& img,
                const Program& prog, std::vector<UnsupportedInstruction>* unsupported)
        : f_(f), img_(img), prog_(prog), unsupported_(unsupported) {
        for (size_t i = 0; i < f.blocks.size() && i < cfg.blocks.size(); ++i) {
            if (!f.blocks[i].insn_vas.empty()) {
                label_of_[f.blocks[i].insn_vas.front()] = cfg.blocks[i];
            }
        }
    }

    std::vector<PcodeOp> run(const BasicBlock& b) {
        ops_.clear();
        pending_ = Pending{};
        for (uint64_t va : b.insn_vas) {
            const Instruction* insn = f_.instruction_at(va);
            if (!insn || !lift(*insn)) break; // truncate at unsupported input
        }
        return std::move(ops_);
    }

private:
    enum class PendKind { none, compare, bit_test, arith };
    struct Pending {
        PendKind kind = PendKind::none;
        Instruction insn;  // compare / bit_test: operands re-read at the jump
        Varnode result;    // arith: value the flags describe
        int width = 8;
    };

    const FunctionRecord& f_;
    const BinaryImage& img_;
    const Program& prog_;
    std::vector<UnsupportedInstruction>* unsupported_;
    std::map<uint64_t, std::string> label_of_;
    std::vector<PcodeOp> ops_;
    int useq_ = 0;
    const Instruction* cur_ = nullptr;
    Pending pending_;

    Varnode unique(int width, std::string type = "") {
        Varnode v;
        v.space = VarSpace::unique;
        v.offset = useq_++;
        v.width = width;
        v.type = std::move(type);
        return v;
    }

    static Varnode reg_vn(const std::string& canon64) {
        Varnode v;
        v.space = VarSpace::reg;
        v.width = 8;
        v.reg = upper(canon64);
        return v;
    }

    static Varnode flag_vn(const std::string& name) {
        Varnode v;
        v.space = VarSpace::flag;
        v.width = 1;
        v.reg = name;
        v.type = "bool";
        return v;
    }

    static Varnode slot_vn(int64_t offset, int width) {
        Varnode v;
        v.space = VarSpace::stack;
        v.width = width;
        v.offset = offset;
        return v;
    }

    Varnode emit(PcodeOpcode opc, std::vector<Varnode> ins, int width,
                 std::optional<Varnode> out = std::nullopt, std::string type = "") {
        PcodeOp op;
        op.opcode = opc;
        op.inputs = std::move(ins);
        op.va = cur_ ? cur_->va : 0;
        op.output = out ? *out : unique(width, std::move(type));
        ops_.push_back(op);
        return *ops_.back().output;
    }

    void emit_void(PcodeOpcode opc, std::vector<Varnode> ins, std::string target = "",
                   std::string callee = "") {
        PcodeOp op;
        op.opcode = opc;
        op.inputs = std::move(ins);
        op.va = cur_ ? cur_->va : 0;
        op.target = std::move(target);
        op.callee = std::move(callee);
        ops_.push_back(op);
    }

    bool unsupported(const Instruction& insn) {
        if (unsupported_) unsupported_->push_back({insn.va, insn.mnemonic});
        return false;
    }

    // [rbp+disp] with no index is a named frame slot, not a memory operation
    static bool is_slot(const Operand& op) {
        return op.kind == OperandKind::mem && !op.rip_relative && op.base == "rbp" &&
               op.index.empty();
    }

    std::optional<Varnode> direct_dest(const Operand& op) {
        if (op.kind == OperandKind::reg && register_width(op.reg) == 8) {
            return reg_vn(canonical_register(op.reg));
        }
        if (is_slot(op)) return slot_vn(op.disp, op.width);
        return std::nullopt;
    }

    Varnode read_reg(const std::string& name) {
        int w = register_width(name);
        Varnode full = reg_vn(canonical_register(name));
        if (w == 8) return full;
        int off = is_high_byte(name) ? 1 : 0;
        return emit(PcodeOpcode::SUBPIECE, {full, make_const(off, 4)}, w);
    }

    // effective address of a non-rip memory operand
    Varnode address_of(const Operand& op) {
        std::optional<Varnode> addr;
        if (!op.base.empty()) addr = reg_vn(op.base);
        if (!op.index.empty()) {
            Varnode iv = reg_vn(op.index);
            if (op.scale > 1) {
                iv = emit(PcodeOpcode::INT_MULT, {iv, make_const(op.scale, 8)}, 8,
                          std::nullopt, "longlong");
            }
            addr = addr ? emit(PcodeOpcode::INT_ADD, {*addr, iv}, 8, std::nullopt, "longlong")
                        : iv;
        }
        if (!addr) return make_const(static_cast<uint64_t>(op.disp), 8);
        if (op.disp > 0) {
            addr = emit(PcodeOpcode::INT_ADD, {*addr, make_const(op.disp, 8)}, 8,
                        std::nullopt, "longlong");
        } else if (op.disp < 0) {
            addr = emit(PcodeOpcode::INT_SUB, {*addr, make_const(-op.disp, 8)}, 8,
                        std::nullopt, "longlong");
        }
        return *addr;
    }

    Varnode load_mem(const Operand& op, std::optional<Varnode> out = std::nullopt) {
        if (op.rip_relative) {
            uint64_t addr = *cur_->rip_target();
            return emit(PcodeOpcode::LOAD, {make_const(addr, 8)}, op.width, out,
                        out ? "" : load_type(op.width));
        }
        Varnode a = address_of(op);
        Varnode c = emit(PcodeOpcode::CAST, {a}, 8, std::nullopt, "longlong *");
        return emit(PcodeOpcode::LOAD, {c}, op.width, out, out ? "" : load_type(op.width));
    }

    void store_mem(const Operand& op, const Varnode& value) {
        if (op.rip_relative) {
            emit_void(PcodeOpcode::STORE, {make_const(*cur_->rip_target(), 8), value});
            return;
        }
        Varnode a = address_of(op);
        Varnode c = emit(PcodeOpcode::CAST, {a}, 8, std::nullopt, "longlong *");
        emit_void(PcodeOpcode::STORE, {c, value});
    }

    Varnode read_operand(const Operand& op) {
        switch (op.kind) {
            case OperandKind::imm:
                return make_const(static_cast<uint64_t>(op.imm) & width_mask(op.width),
                                  op.width);
            case OperandKind::reg:
                return read_reg(op.reg);
            case OperandKind::mem:
                if (is_slot(op)) return slot_vn(op.disp, op.width);
                return load_mem(op);
        }
        return make_const(0, op.width);
    }

    // routes a computed value into a sub-register or memory destination
    void writeback(const Operand& dst, const Varnode& v) {
        if (dst.kind == OperandKind::reg) {
            int w = register_width(dst.reg);
            Varnode full = reg_vn(canonical_register(dst.reg));
            if (w == 4) { // 32-bit defs zero the upper half
                emit(PcodeOpcode::INT_ZEXT, {v}, 8, full);
            } else if (is_high_byte(dst.reg)) {
                Varnode lo = emit(PcodeOpcode::SUBPIECE, {full, make_const(0, 4)}, 1);
                Varnode hi = emit(PcodeOpcode::SUBPIECE, {full, make_const(2, 4)}, 6);
                Varnode mid = emit(PcodeOpcode::PIECE, {v, lo}, 2);
                emit(PcodeOpcode::PIECE, {hi, mid}, 8, full);
            } else { // 1- or 2-byte low write keeps the rest of the register
                Varnode hi = emit(PcodeOpcode::SUBPIECE, {full, make_const(w, 4)}, 8 - w);
                emit(PcodeOpcode::PIECE, {hi, v}, 8, full);
            }
            return;
        }
        store_mem(dst, v);
    }

    int dest_width(const Operand& op) {
        return op.kind == OperandKind::reg ? register_width(op.reg) : op.width;
    }

    void op_mov(const Instruction& insn) {
        const Operand& d = insn.operands[0];
        const Operand& s = insn.operands[1];
        auto direct = direct_dest(d);
        if (direct) {
            if (s.kind == OperandKind::mem && !is_slot(s)) {
                load_mem(s, direct);
            } else {
                emit(PcodeOpcode::COPY, {read_operand(s)}, direct->width, direct);
            }
            return;
        }
        writeback(d, read_operand(s));
    }

    void op_lea(const Instruction& insn) {
        const Operand& d = insn.operands[0];
        const Operand& m = insn.operands[1];
        auto direct = direct_dest(d);
        Varnode v;
        if (m.rip_relative) {
            v = emit(PcodeOpcode::PTRSUB,
                     {make_const(0, 8), make_const(*insn.rip_target(), 8)}, 8, direct);
        } else {
            v = address_of(m);
            if (direct) {
                if (!ops_.empty() && ops_.back().output && *ops_.back().output == v) {
                    ops_.back().output = direct; // bind the last address op to the register
                    v = *direct;
                } else {
                    v = emit(PcodeOpcode::COPY, {v}, 8, direct);
                }
            }
        }
        if (!direct) writeback(d, v);
    }

    void op_alu(const Instruction& insn, PcodeOpcode opc) {
        const Operand& d = insn.operands[0];
        const Operand& s = insn.operands[1];
        int w = dest_width(d);
        Varnode a = read_operand(d);
        Varnode b = read_operand(s);
        auto direct = direct_dest(d);
        Varnode r = emit(opc, {a, b}, w, direct);
        if (!direct) writeback(d, r);
        pending_ = {PendKind::arith, {}, r, w};
    }

    void op_step(const Instruction& insn, PcodeOpcode opc) { // inc / dec
        const Operand& d = insn.operands[0];
        int w = dest_width(d);
        Varnode a = read_operand(d);
        auto direct = direct_dest(d);
        Varnode r = emit(opc, {a, make_const(1, w)}, w, direct);
        if (!direct) writeback(d, r);
        pending_ = {PendKind::arith, {}, r, w};
    }

    void op_imul(const Instruction& insn) {
        int w = dest_width(insn.operands[0]);
        Varnode a, b;
        if (insn.operands.size() == 3) {
            a = read_operand(insn.operands[1]);
            b = read_operand(insn.operands[2]);
        } else {
            a = read_operand(insn.operands[0]);
            b = read_operand(insn.operands[1]);
        }
        auto direct = direct_dest(insn.operands[0]);
        Varnode r = emit(PcodeOpcode::INT_MULT, {a, b}, w, direct);
        if (!direct) writeback(insn.operands[0], r);
        pending_ = {PendKind::arith, {}, r, w};
    }

    void op_shift(const Instruction& insn, PcodeOpcode opc) {
        const Operand& d = insn.operands[0];
        int w = dest_width(d);
        Varnode a = read_operand(d);
        Varnode cnt = read_operand(insn.operands[1]);
        auto direct = direct_dest(d);
        Varnode r = emit(opc, {a, cnt}, w, direct);
        if (!direct) writeback(d, r);
        pending_ = {PendKind::arith, {}, r, w};
    }

    void op_extend(const Instruction& insn, bool sign) {
        const Operand& d = insn.operands[0];
        Varnode v = read_operand(insn.operands[1]);
        int dw = register_width(d.reg);
        Varnode full = reg_vn(canonical_register(d.reg));
        if (dw == 8) {
            emit(sign ? PcodeOpcode::INT_SEXT : PcodeOpcode::INT_ZEXT, {v}, 8, full);
        } else if (sign) { // movsx r32: sign-extend to 32, zero to 64
            Varnode u = emit(PcodeOpcode::INT_SEXT, {v}, 4);
            emit(PcodeOpcode::INT_ZEXT, {u}, 8, full);
        } else { // movzx r32 zeroes everything above the source anyway
            emit(PcodeOpcode::INT_ZEXT, {v}, 8, full);
        }
    }

    void op_push(const Instruction& insn) {
        Varnode v = read_operand(insn.operands[0]);
        Varnode rsp = reg_vn("rsp");
        Varnode nrsp = emit(PcodeOpcode::INT_SUB, {rsp, make_const(8, 8)}, 8, rsp);
        Varnode c = emit(PcodeOpcode::CAST, {nrsp}, 8, std::nullopt, "longlong *");
        emit_void(PcodeOpcode::STORE, {c, v});
    }

    void op_pop(const Instruction& insn) {
        Varnode rsp = reg_vn("rsp");
        Varnode c = emit(PcodeOpcode::CAST, {rsp}, 8, std::nullopt, "longlong *");
        emit(PcodeOpcode::LOAD, {c}, 8, reg_vn(canonical_register(insn.operands[0].reg)));
        emit(PcodeOpcode::INT_ADD, {rsp, make_const(8, 8)}, 8, rsp);
    }

    void op_leave(const Instruction&) {
        Varnode rbp = reg_vn("rbp");
        Varnode rsp = reg_vn("rsp");
        emit(PcodeOpcode::COPY, {rbp}, 8, rsp);
        Varnode c = emit(PcodeOpcode::CAST, {rsp}, 8, std::nullopt, "longlong *");
        emit(PcodeOpcode::LOAD, {c}, 8, rbp);
        emit(PcodeOpcode::INT_ADD, {rsp, make_const(8, 8)}, 8, rsp);
    }

    std::string callee_name(uint64_t target) const {
        auto thunk = prog_.thunks.find(target);
        if (thunk != prog_.thunks.end()) return thunk->second;
        if (const FunctionRecord* g = prog_.by_entry(target)) return g->name;
        char buf[32];
        snprintf(buf, sizeof buf, "sub_%llx", static_cast<unsigned long long>(target));
        return buf;
    }

    std::optional<std::string> import_target(const Instruction& insn) const {
        if (auto rip = insn.rip_target()) {
            auto it = img_.import_slots.find(*rip);
            if (it != img_.import_slots.end()) return it->second;
        }
        return std::nullopt;
    }

    void emit_call(const std::string& callee) {
        PcodeOp op;
        op.opcode = PcodeOpcode::CALL;
        op.va = cur_->va;
        op.callee = callee;
        op.output = reg_vn("rax");
        ops_.push_back(op);
    }

    void op_call(const Instruction& insn) {
        if (insn.static_target) {
            emit_call(callee_name(*insn.static_target));
            return;
        }
        if (auto import = import_target(insn)) {
            emit_call(*import);
            return;
        }
        Varnode tv = read_operand(insn.operands[0]);
        emit(PcodeOpcode::CALLIND, {tv}, 8, reg_vn("rax"));
    }

    bool op_jmp(const Instruction& insn) {
        if (insn.static_target) {
            auto it = label_of_.find(*insn.static_target);
            if (it != label_of_.end()) {
                emit_void(PcodeOpcode::BRANCH, {}, it->second);
            } else { // tail call leaves the function
                emit_call(callee_name(*insn.static_target));
                emit_void(PcodeOpcode::RETURN, {reg_vn("rax")});
            }
            return true;
        }
        if (auto import = import_target(insn)) {
            emit_call(*import);
            emit_void(PcodeOpcode::RETURN, {reg_vn("rax")});
            return true;
        }
        Varnode tv = read_operand(insn.operands[0]);
        emit_void(PcodeOpcode::BRANCHIND, {tv});
        return true;
    }

    bool op_jcc(const Instruction& insn) {
        if (!insn.static_target) return unsupported(insn);
        auto label = label_of_.find(*insn.static_target);
        if (label == label_of_.end()) return unsupported(insn); // conditional tail jump
        Varnode cond;
        if (insn.mnemonic == "jo" || insn.mnemonic == "jno" || insn.mnemonic == "jp" ||
            insn.mnemonic == "jnp") {
            // overflow and parity are not modeled; the flag reads as constant false
            const char* flag = insn.mnemonic[1] == 'o' || insn.mnemonic[2] == 'o' ? "OF" : "PF";
            cond = emit(PcodeOpcode::COPY, {make_const(0, 1)}, 1, flag_vn(flag));
            if (insn.mnemonic == "jno" || insn.mnemonic == "jnp") {
                cond = emit(PcodeOpcode::BOOL_NEGATE, {cond}, 1, std::nullopt, "bool");
            }
        } else {
            auto spec = cond_table().find(insn.mnemonic);
            if (spec == cond_table().end()) return unsupported(insn);
            cond = synth_condition(spec->second);
            cur_ = &insn; // synth may have re-pointed at the pending compare
        }
        emit_void(PcodeOpcode::CBRANCH, {cond}, label->second);
        return true;
    }

    Varnode synth_condition(const CondSpec& spec) {
        Varnode lhs, rhs;
        switch (pending_.kind) {
            case PendKind::compare:
                cur_ = &pending_.insn; // rip-relative reads resolve against the compare
                lhs = read_operand(pending_.insn.operands[0]);
                rhs = read_operand(pending_.insn.operands[1]);
                break;
            case PendKind::bit_test: {
                cur_ = &pending_.insn;
                Varnode a = read_operand(pending_.insn.operands[0]);
                Varnode b = read_operand(pending_.insn.operands[1]);
                int w = pending_.insn.operands[0].kind == OperandKind::reg
                            ? register_width(pending_.insn.operands[0].reg)
                            : pending_.insn.operands[0].width;
                lhs = emit(PcodeOpcode::INT_AND, {a, b}, w);
                rhs = make_const(0, w);
                break;
            }
            case PendKind::arith:
                lhs = pending_.result;
                rhs = make_const(0, pending_.width);
                break;
            case PendKind::none: {
                // no flag-setting instruction in this block: read the flag itself
                const char* flag = spec.cmp == PcodeOpcode::INT_EQUAL ||
                                           spec.cmp == PcodeOpcode::INT_NOTEQUAL
                                       ? "ZF"
                                       : (spec.cmp == PcodeOpcode::INT_LESS ||
                                                  spec.cmp == PcodeOpcode::INT_LESSEQUAL
                                              ? "CF"
                                              : "SF");
                Varnode v = flag_vn(flag);
                bool neg = spec.negate || spec.cmp == PcodeOpcode::INT_NOTEQUAL;
                if (neg) return emit(PcodeOpcode::BOOL_NEGATE, {v}, 1, std::nullopt, "bool");
                return v;
            }
        }
        std::optional<Varnode> out;
        if (spec.flag[0] != '\0') out = flag_vn(spec.flag);
        Varnode c = emit(spec.cmp, {lhs, rhs}, 1, out, "bool");
        if (spec.negate) {
            c = emit(PcodeOpcode::BOOL_NEGATE, {c}, 1, std::nullopt, "bool");
        }
        return c;
    }

    bool lift(const Instruction& insn) {
        cur_ = &insn;
        const std::string& m = insn.mnemonic;
        if (m == "nop") return true;
        if (m == "mov") { op_mov(insn); return true; }
        if (m == "lea") { op_lea(insn); return true; }
        if (m == "add") { op_alu(insn, PcodeOpcode::INT_ADD); return true; }
        if (m == "sub") { op_alu(insn, PcodeOpcode::INT_SUB); return true; }
        if (m == "and") { op_alu(insn, PcodeOpcode::INT_AND); return true; }
        if (m == "or") { op_alu(insn, PcodeOpcode::INT_OR); return true; }
        if (m == "xor") { op_alu(insn, PcodeOpcode::INT_XOR); return true; }
        if (m == "imul") { op_imul(insn); return true; }
        if (m == "inc") { op_step(insn, PcodeOpcode::INT_ADD); return true; }
        if (m == "dec") { op_step(insn, PcodeOpcode::INT_SUB); return true; }
        if (m == "shl") { op_shift(insn, PcodeOpcode::INT_LEFT); return true; }
        if (m == "shr") { op_shift(insn, PcodeOpcode::INT_RIGHT); return true; }
        if (m == "sar") { op_shift(insn, PcodeOpcode::INT_SRIGHT); return true; }
        if (m == "movzx") { op_extend(insn, false); return true; }
        if (m == "movsx" || m == "movsxd") { op_extend(insn, true); return true; }
        if (m == "cmp") { pending_ = {PendKind::compare, insn, {}, 0}; return true; }
        if (m == "test") { pending_ = {PendKind::bit_test, insn, {}, 0}; return true; }
        if (m == "push") { op_push(insn); return true; }
        if (m == "pop") { op_pop(insn); return true; }
        if (m == "leave") { op_leave(insn); return true; }
        if (m == "call") { op_call(insn); return true; }
        if (m == "jmp") return op_jmp(insn);
        if (insn.flow == Flow::cond_jump) return op_jcc(insn);
        if (m == "ret") {
            emit_void(PcodeOpcode::RETURN, {reg_vn("rax")});
            return true;
        }
        if (m == "int3" || m == "hlt" || m == "ud2") {
            emit_void(PcodeOpcode::RETURN, {});
            return true;
        }
        return unsupported(insn);
    }
};

int block_index(const std::string& label) {
    if (label.rfind("blk_", 0) != 0) return -1;
    return std::atoi(label.c_str() + 4);
}

} // namespace

const char* opcode_name(PcodeOpcode op) {
    int i = static_cast<int>(op);
    return i >= 0 && i < kOpcodeCount ? kOpcodeNames[i] : "?";
}

std::optional<PcodeOpcode> opcode_from_name(const std::string& name) {
    for (int i = 0; i < kOpcodeCount; ++i) {
        if (name == kOpcodeNames[i]) return static_cast<PcodeOpcode>(i);
    }
    return std::nullopt;
}

Varnode make_const(uint64_t value, int width) {
    Varnode v;
    v.space = VarSpace::constant;
    v.width = width;
    v.value = value;
    return v;
}

std::vector<PcodeOp> lift_block(const FunctionRecord& f, const BasicBlock& b,
                                const Cfg& cfg, const BinaryImage& img,
                                const Program& prog,
                                std::vector<UnsupportedInstruction>* unsupported) {
    BlockLifter lifter(f, cfg, img, prog, unsupported);
    return lifter.run(b);
}

LiftedFunction lift_function(const FunctionRecord& f, const Cfg& cfg,
                             const BinaryImage& img, const Program& prog,
                             std::vector<UnsupportedInstruction>* unsupported) {
    LiftedFunction lf;
    lf.name = f.name;
    lf.cfg = cfg;
    for (size_t i = 0; i < f.blocks.size(); ++i) {
        LiftedBlock blk;
        blk.label = f.blocks[i].label;
        blk.ops = lift_block(f, f.blocks[i], cfg, img, prog, unsupported);
        lf.blocks.push_back(std::move(blk));
    }

    // Make fallthrough explicit whenever the successor is not the next block
    // in label order; otherwise the text form would misstate control flow.
    for (size_t i = 0; i < lf.blocks.size(); ++i) {
        LiftedBlock& blk = lf.blocks[i];
        bool terminated = !blk.ops.empty() && is_branch_op(blk.ops.back().opcode);
        std::string falls_to;
        for (const auto& e : lf.cfg.edges) {
            if (e.source != blk.label) continue;
            if (e.edge_type == "fallthrough" || e.edge_type == "unconditional") {
                falls_to = e.target;
            }
            if (e.edge_type == "branch_false") falls_to = e.target;
        }
        if (falls_to.empty()) continue;
        std::string next = i + 1 < lf.blocks.size() ? lf.blocks[i + 1].label : "";
        bool cbranch_tail = !blk.ops.empty() && blk.ops.back().opcode == PcodeOpcode::CBRANCH;
        if ((!terminated || cbranch_tail) && falls_to != next) {
            PcodeOp br;
            br.opcode = PcodeOpcode::BRANCH;
            br.target = falls_to;
            br.va = blk.ops.empty() ? 0 : blk.ops.back().va;
            blk.ops.push_back(std::move(br));
        }
    }
    return lf;
}

// ----------------------------------------------------------------- SSA form

namespace {

struct BlockGraph {
    int n = 0;
    std::vector<std::vector<int>> preds, succs;
    std::vector<int> idom; // idom[0] == 0; unreachable roots point at themselves

    explicit BlockGraph(const LiftedFunction& lf) {
        n = static_cast<int>(lf.blocks.size());
        preds.resize(n);
        succs.resize(n);
        for (const auto& e : lf.cfg.edges) {
            int s = block_index(e.source), t = block_index(e.target);
            if (s < 0 || t < 0 || s >= n || t >= n) continue;
            succs[s].push_back(t);
            preds[t].push_back(s);
        }
        for (auto& p : preds) std::sort(p.begin(), p.end());
        for (auto& s : succs) std::sort(s.begin(), s.end());
        compute_idom();
    }

    void compute_idom() {
        idom.assign(n, -1);
        if (n == 0) return;
        idom[0] = 0;
        bool changed = true;
        while (changed) {
            changed = false;
            for (int b = 1; b < n; ++b) {
                int new_idom = -1;
                for (int p : preds[b]) {
                    if (idom[p] < 0) continue;
                    new_idom = new_idom < 0 ? p : intersect(new_idom, p);
                }
                if (new_idom < 0) continue;
                if (idom[b] != new_idom) {
                    idom[b] = new_idom;
                    changed = true;
                }
            }
        }
        for (int b = 0; b < n; ++b) {
            if (idom[b] < 0) idom[b] = b; // unreachable: treat as its own root
        }
    }

    int intersect(int a, int b) const {
        while (a != b) {
            while (a > b) a = idom[a];
            while (b > a) b = idom[b];
        }
        return a;
    }

    bool dominates(int a, int b) const { // reflexive
        while (true) {
            if (a == b) return true;
            if (b == 0 || idom[b] == b) return false;
            b = idom[b];
        }
    }

    std::vector<std::set<int>> frontiers() const {
        std::vector<std::set<int>> df(n);
        for (int b = 0; b < n; ++b) {
            if (preds[b].size() < 2) continue;
            for (int p : preds[b]) {
                int runner = p;
                while (runner != idom[b] && runner != idom[runner]) {
                    df[runner].insert(b);
                    runner = idom[runner];
                }
                if (runner != idom[b] && runner == idom[runner] && runner != b) {
                    df[runner].insert(b);
                }
            }
        }
        return df;
    }
};

std::string location_key(const Varnode& v) {
    switch (v.space) {
        case VarSpace::reg: return "r:" + v.reg;
        case VarSpace::flag: return "f:" + v.reg;
        case VarSpace::stack: return "s:" + std::to_string(v.offset);
        case VarSpace::unique: return "u:" + std::to_string(v.offset);
        default: return "";
    }
}

} // namespace

void construct_ssa(LiftedFunction& lf) {
    const int n = static_cast<int>(lf.blocks.size());
    if (n == 0) {
        lf.values.clear();
        lf.input_ids.clear();
        return;
    }
    BlockGraph g(lf);

    // liveness + def sites per named location (uniques never cross blocks)
    std::map<std::string, Varnode> shape;   // representative varnode per key
    std::map<std::string, std::set<int>> def_blocks;
    std::vector<std::set<std::string>> gen(n), kill(n);
    for (int b = 0; b < n; ++b) {
        for (const auto& op : lf.blocks[b].ops) {
            for (const auto& in : op.inputs) {
                if (in.space == VarSpace::constant || in.space == VarSpace::unique) continue;
                std::string k = location_key(in);
                shape.emplace(k, in);
                if (!kill[b].count(k)) gen[b].insert(k);
            }
            if (op.output && op.output->space != VarSpace::constant &&
                op.output->space != VarSpace::unique) {
                std::string k = location_key(*op.output);
                shape.emplace(k, *op.output);
                kill[b].insert(k);
                def_blocks[k].insert(b);
            }
        }
    }
    std::vector<std::set<std::string>> live_in(n), live_out(n);
    bool changed = true;
    while (changed) {
        changed = false;
        for (int b = n - 1; b >= 0; --b) {
            std::set<std::string> out;
            for (int s : g.succs[b]) {
                out.insert(live_in[s].begin(), live_in[s].end());
            }
            std::set<std::string> in = gen[b];
            for (const auto& k : out) {
                if (!kill[b].count(k)) in.insert(k);
            }
            if (out != live_out[b] || in != live_in[b]) {
                live_out[b] = std::move(out);
                live_in[b] = std::move(in);
                changed = true;
            }
        }
    }

    // PHI insertion at the iterated dominance frontier, pruned by liveness
    auto df = g.frontiers();
    std::map<int, std::set<std::string>> has_phi;
    for (auto& [key, blocks] : def_blocks) {
        std::vector<int> work(blocks.begin(), blocks.end());
        std::set<int> placed;
        while (!work.empty()) {
            int b = work.back();
            work.pop_back();
            for (int j : df[b]) {
                if (placed.count(j) || !live_in[j].count(key)) continue;
                placed.insert(j);
                Varnode proto = shape.at(key);
                proto.type.clear();
                PcodeOp phi;
                phi.opcode = PcodeOpcode::PHI;
                phi.output = proto;
                phi.inputs.assign(g.preds[j].size(), proto);
                auto& ops = lf.blocks[j].ops;
                ops.insert(ops.begin(), std::move(phi));
                has_phi[j].insert(key);
                if (!blocks.count(j)) work.push_back(j);
            }
        }
    }

    // renaming along the dominator tree
    struct Val {
        Varnode proto;
        bool is_input = false;
        int final_id = -1;
    };
    std::vector<Val> vals;
    std::map<std::string, std::vector<int>> stacks;
    std::map<std::string, int> input_of;

    auto new_val = [&](const Varnode& vn, bool input) {
        vals.push_back({vn, input, -1});
        return static_cast<int>(vals.size()) - 1;
    };
    auto resolve = [&](const std::string& key, const Varnode& use) -> int {
        auto st = stacks.find(key);
        if (st != stacks.end() && !st->second.empty()) return st->second.back();
        auto in = input_of.find(key);
        if (in != input_of.end()) return in->second;
        Varnode proto = use;
        if (proto.space == VarSpace::reg) {
            proto.width = 8;
            proto.type = "longlong";
        } else if (proto.space == VarSpace::flag) {
            proto.type = "bool";
        } else if (proto.space == VarSpace::stack && proto.width == 8) {
            proto.type = "longlong";
        }
        int h = new_val(proto, true);
        input_of[key] = h;
        return h;
    };
    auto apply = [&](Varnode& vn, int handle) {
        const Varnode& p = vals[handle].proto;
        vn = p;
        vn.ssa_id = handle; // provisional: handle index until renumbering
    };

    std::vector<std::vector<int>> dom_children(n);
    for (int b = 1; b < n; ++b) {
        if (g.idom[b] != b) dom_children[g.idom[b]].push_back(b);
    }

    std::vector<bool> renamed(n, false);
    auto rename_block = [&](auto&& self, int b) -> void {
        renamed[b] = true;
        std::vector<std::string> pushed;
        std::map<std::string, int> local_unique;
        for (auto& op : lf.blocks[b].ops) {
            if (op.opcode != PcodeOpcode::PHI) {
                for (auto& in : op.inputs) {
                    if (in.space == VarSpace::constant) continue;
                    std::string k = location_key(in);
                    if (in.space == VarSpace::unique) {
                        apply(in, local_unique.at(k));
                    } else {
                        apply(in, resolve(k, in));
                    }
                }
            }
            if (op.output) {
                Varnode& out = *op.output;
                std::string k = location_key(out);
                int h = new_val(out, false);
                if (out.space == VarSpace::unique) {
                    local_unique[k] = h;
                } else {
                    stacks[k].push_back(h);
                    pushed.push_back(k);
                }
                out.ssa_id = h;
            }
        }
        for (int s : g.succs[b]) {
            // position(s) of b among s's predecessors = this edge's PHI slot(s)
            for (size_t slot = 0; slot < g.preds[s].size(); ++slot) {
                if (g.preds[s][slot] != b) continue;
                for (auto& op : lf.blocks[s].ops) {
                    if (op.opcode != PcodeOpcode::PHI) break;
                    std::string k = location_key(*op.output);
                    apply(op.inputs[slot], resolve(k, op.inputs[slot]));
                }
            }
        }
        for (int c : dom_children[b]) self(self, c);
        for (auto it = pushed.rbegin(); it != pushed.rend(); ++it) stacks[*it].pop_back();
    };
    rename_block(rename_block, 0);
    for (int b = 1; b < n; ++b) {
        if (!renamed[b] && g.idom[b] == b) rename_block(rename_block, b);
    }

    // sequential ids in first-appearance order over blocks in label order;
    // inputs take theirs at first use, defined values at their defining op
    int next = 0;
    for (auto& blk : lf.blocks) {
        for (auto& op : blk.ops) {
            for (auto& in : op.inputs) {
                if (in.ssa_id < 0) continue;
                Val& v = vals[in.ssa_id];
                if (v.is_input && v.final_id < 0) v.final_id = next++;
            }
            if (op.output && op.output->ssa_id >= 0) {
                Val& v = vals[op.output->ssa_id];
                if (v.final_id < 0) v.final_id = next++;
            }
        }
    }
    lf.values.assign(next, SsaValueInfo{});
    lf.input_ids.clear();
    for (const auto& v : vals) {
        if (v.final_id < 0) continue; // unreferenced (possible for dead phi slots)
        SsaValueInfo info;
        info.id = v.final_id;
        info.width = v.proto.width;
        info.space = v.proto.space;
        info.reg = v.proto.reg;
        info.offset = v.proto.offset;
        info.type = v.proto.type;
        info.is_input = v.is_input;
        lf.values[v.final_id] = info;
        if (v.is_input) lf.input_ids.push_back(v.final_id);
    }
    std::sort(lf.input_ids.begin(), lf.input_ids.end());
    for (auto& blk : lf.blocks) {
        for (auto& op : blk.ops) {
            for (auto& in : op.inputs) {
                if (in.ssa_id >= 0) in.ssa_id = vals[in.ssa_id].final_id;
            }
            if (op.output && op.output->ssa_id >= 0) {
                op.output->ssa_id = vals[op.output->ssa_id].final_id;
            }
        }
    }
}

std::vector<std::string> validate_ssa(const LiftedFunction& lf) {
    std::vector<std::string> bad;
    const int n = static_cast<int>(lf.blocks.size());
    for (int i = 0; i < n; ++i) {
        if (lf.blocks[i].label != "blk_" + std::to_string(i)) {
            bad.push_back("block " + std::to_string(i) + " mislabeled " + lf.blocks[i].label);
        }
    }
    BlockGraph g(lf);

    const int nv = static_cast<int>(lf.values.size());
    std::vector<int> def_count(nv, 0);
    std::map<int, std::pair<int, int>> def_site; // id -> (block, op index)
    for (int b = 0; b < n; ++b) {
        const auto& ops = lf.blocks[b].ops;
        for (size_t i = 0; i < ops.size(); ++i) {
            const PcodeOp& op = ops[i];
            if (op.opcode == PcodeOpcode::PHI) {
                if (i != 0 && ops[i - 1].opcode != PcodeOpcode::PHI) {
                    bad.push_back("PHI not at head of " + lf.blocks[b].label);
                }
                if (op.inputs.size() != g.preds[b].size()) {
                    bad.push_back("PHI arity " + std::to_string(op.inputs.size()) + " != " +
                                  std::to_string(g.preds[b].size()) + " preds in " +
                                  lf.blocks[b].label);
                }
            }
            if (is_branch_op(op.opcode)) {
                bool last = i + 1 == ops.size();
                bool cbranch_then_branch = op.opcode == PcodeOpcode::CBRANCH &&
                                           i + 2 == ops.size() &&
                                           ops[i + 1].opcode == PcodeOpcode::BRANCH;
                if (!last && !cbranch_then_branch) {
                    bad.push_back(std::string(opcode_name(op.opcode)) + " not block-final in " +
                                  lf.blocks[b].label);
                }
            }
            if (op.output) {
                int id = op.output->ssa_id;
                if (id < 0 || id >= nv) {
                    bad.push_back("unnumbered output in " + lf.blocks[b].label);
                } else {
                    def_count[id]++;
                    def_site[id] = {b, static_cast<int>(i)};
                }
            }
        }
    }
    for (int id = 0; id < nv; ++id) {
        if (lf.values[id].id != id) bad.push_back("value table misindexed at " + std::to_string(id));
        bool input = lf.values[id].is_input;
        if (input && def_count[id] != 0) {
            bad.push_back("input v" + std::to_string(id) + " has a defining op");
        }
        if (!input && def_count[id] != 1) {
            bad.push_back("v" + std::to_string(id) + " defined " +
                          std::to_string(def_count[id]) + " times");
        }
    }
    // defs must dominate uses (PHI uses checked against the incoming edge)
    for (int b = 0; b < n; ++b) {
        const auto& ops = lf.blocks[b].ops;
        for (size_t i = 0; i < ops.size(); ++i) {
            const PcodeOp& op = ops[i];
            for (size_t k = 0; k < op.inputs.size(); ++k) {
                const Varnode& in = op.inputs[k];
                if (in.space == VarSpace::constant) continue;
                int id = in.ssa_id;
                if (id < 0 || id >= nv) {
                    bad.push_back("unnumbered input in " + lf.blocks[b].label);
                    continue;
                }
                if (lf.values[id].is_input) continue;
                auto site = def_site.find(id);
                if (site == def_site.end()) {
                    bad.push_back("v" + std::to_string(id) + " used but never defined");
                    continue;
                }
                auto [db, di] = site->second;
                bool ok;
                if (op.opcode == PcodeOpcode::PHI) {
                    ok = k < g.preds[b].size() && g.dominates(db, g.preds[b][k]);
                } else if (db == b) {
                    ok = di < static_cast<int>(i);
                } else {
                    ok = g.dominates(db, b);
                }
                if (!ok) {
                    bad.push_back("v" + std::to_string(id) + " use in " + lf.blocks[b].label +
                                  " not dominated by its definition");
                }
            }
        }
    }
    return bad;
}

// ---------------------------------------------------------------- rendering

namespace {

std::string render_const(const Varnode& v) {
    char buf[40];
    if (v.value < 4096) {
        snprintf(buf, sizeof buf, "%llu:%d", static_cast<unsigned long long>(v.value), v.width);
    } else {
        snprintf(buf, sizeof buf, "0x%llx:%d", static_cast<unsigned long long>(v.value), v.width);
    }
    return buf;
}

std::string render_value(const Varnode& v) {
    if (v.space == VarSpace::constant) return render_const(v);
    std::string s = "v" + std::to_string(v.ssa_id) + ":" + std::to_string(v.width);
    if (v.space == VarSpace::reg || v.space == VarSpace::flag) {
        s += "@" + v.reg;
    } else if (v.space == VarSpace::stack) {
        char buf[32];
        if (v.offset < 0) {
            snprintf(buf, sizeof buf, "@stack[-0x%llx]",
                     static_cast<unsigned long long>(-v.offset));
        } else {
            snprintf(buf, sizeof buf, "@stack[0x%llx]",
                     static_cast<unsigned long long>(v.offset));
        }
        s += buf;
    }
    if (!v.type.empty()) s += "<" + v.type + ">";
    return s;
}

// CBRANCH conditions render as the defining comparison spelled infix
std::string render_condition(const Varnode& cond, const std::vector<PcodeOp*>& defs) {
    if (cond.space != VarSpace::constant && cond.ssa_id >= 0 &&
        cond.ssa_id < static_cast<int>(defs.size()) && defs[cond.ssa_id]) {
        const PcodeOp& def = *defs[cond.ssa_id];
        if (is_comparison(def.opcode)) {
            return render_value(def.inputs[0]) + " " + comparison_symbol(def.opcode) + " " +
                   render_value(def.inputs[1]);
        }
        if (def.opcode == PcodeOpcode::BOOL_NEGATE) {
            const Varnode& inner = def.inputs[0];
            if (inner.space != VarSpace::constant && inner.ssa_id >= 0 &&
                inner.ssa_id < static_cast<int>(defs.size()) && defs[inner.ssa_id] &&
                is_comparison(defs[inner.ssa_id]->opcode)) {
                const PcodeOp& cmp = *defs[inner.ssa_id];
                return "!(" + render_value(cmp.inputs[0]) + " " +
                       comparison_symbol(cmp.opcode) + " " + render_value(cmp.inputs[1]) + ")";
            }
            return "!" + render_value(inner);
        }
    }
    return render_value(cond);
}

std::vector<PcodeOp*> def_table(LiftedFunction& lf) {
    std::vector<PcodeOp*> defs(lf.values.size(), nullptr);
    for (auto& blk : lf.blocks) {
        for (auto& op : blk.ops) {
            if (op.output && op.output->ssa_id >= 0 &&
                op.output->ssa_id < static_cast<int>(defs.size())) {
                defs[op.output->ssa_id] = &op;
            }
        }
    }
    return defs;
}

} // namespace

std::string render_pcode(const LiftedFunction& lf) {
    auto defs = def_table(const_cast<LiftedFunction&>(lf));
    std::string out;
    for (size_t b = 0; b < lf.blocks.size(); ++b) {
        if (b) out += "\n";
        out += lf.blocks[b].label + ":\n";
        for (const PcodeOp& op : lf.blocks[b].ops) {
            out += "    ";
            switch (op.opcode) {
                case PcodeOpcode::BRANCH:
                    out += "BRANCH " + op.target;
                    break;
                case PcodeOpcode::CBRANCH:
                    out += "CBRANCH " + op.target + ", " + render_condition(op.inputs[0], defs);
                    break;
                case PcodeOpcode::BRANCHIND:
                    out += "BRANCHIND " + render_value(op.inputs[0]);
                    break;
                case PcodeOpcode::RETURN:
                    out += "RETURN";
                    if (!op.inputs.empty()) out += " " + render_value(op.inputs[0]);
                    break;
                case PcodeOpcode::STORE:
                    out += "STORE [" + render_value(op.inputs[0]) + "], " +
                           render_value(op.inputs[1]);
                    break;
                case PcodeOpcode::CALL:
                    out += render_value(*op.output) + " = CALL " + op.callee;
                    break;
                case PcodeOpcode::CALLIND:
                    out += render_value(*op.output) + " = CALLIND " + render_value(op.inputs[0]);
                    break;
                case PcodeOpcode::LOAD:
                    out += render_value(*op.output) + " = LOAD [" + render_value(op.inputs[0]) +
                           "]";
                    break;
                case PcodeOpcode::PHI: {
                    out += render_value(*op.output) + " = PHI(";
                    for (size_t i = 0; i < op.inputs.size(); ++i) {
                        if (i) out += ", ";
                        out += render_value(op.inputs[i]);
                    }
                    out += ")";
                    break;
                }
                default: {
                    out += render_value(*op.output) + " = " + opcode_name(op.opcode);
                    for (size_t i = 0; i < op.inputs.size(); ++i) {
                        out += (i ? ", " : " ") + render_value(op.inputs[i]);
                    }
                    break;
                }
            }
            out += "\n";
        }
    }
    return out;
}

std::string render_assembly(const FunctionRecord& f) {
    auto operand_text = [](const Operand& op) -> std::string {
        char buf[64];
        switch (op.kind) {
            case OperandKind::reg:
                return upper(op.reg);
            case OperandKind::imm:
                if (op.imm < 0) {
                    snprintf(buf, sizeof buf, "-0x%llx",
                             static_cast<unsigned long long>(-op.imm));
                } else {
                    snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(op.imm));
                }
                return buf;
            case OperandKind::mem: {
                std::string s = "[";
                bool have = false;
                if (op.rip_relative) {
                    s += "RIP";
                    have = true;
                } else if (!op.base.empty()) {
                    s += upper(op.base);
                    have = true;
                }
                if (!op.index.empty()) {
                    if (have) s += "+";
                    s += upper(op.index);
                    if (op.scale > 1) s += "*" + std::to_string(op.scale);
                    have = true;
                }
                if (op.disp != 0 || !have) {
                    if (op.disp < 0) {
                        snprintf(buf, sizeof buf, "-0x%llx",
                                 static_cast<unsigned long long>(-op.disp));
                    } else {
                        snprintf(buf, sizeof buf, "%s0x%llx", have ? "+" : "",
                                 static_cast<unsigned long long>(op.disp));
                    }
                    s += buf;
                }
                return s + "]";
            }
        }
        return "";
    };
    std::string out;
    char buf[32];
    for (const Instruction& insn : f.instructions) {
        snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(insn.va));
        out += buf;
        out += "  " + upper(insn.mnemonic);
        for (size_t i = 0; i < insn.operands.size(); ++i) {
            out += (i ? "," : " ") + operand_text(insn.operands[i]);
        }
        if (insn.operands.empty() && insn.static_target) {
            snprintf(buf, sizeof buf, " 0x%llx",
                     static_cast<unsigned long long>(*insn.static_target));
            out += buf;
        }
        out += "\n";
    }
    return out;
}

namespace {

const char* c_type(int width) {
    switch (width) {
        case 8: return "long";
        case 4: return "int";
        case 2: return "short";
        default: return "char";
    }
}

std::string c_value(const Varnode& v) {
    if (v.space == VarSpace::constant) {
        char buf[32];
        if (v.value < 4096) {
            snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v.value));
        } else {
            snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(v.value));
        }
        return buf;
    }
    return "v" + std::to_string(v.ssa_id);
}

std::string c_condition(const Varnode& cond, const std::vector<PcodeOp*>& defs);

std::string c_comparison(const PcodeOp& op) {
    std::string a = c_value(op.inputs[0]), b = c_value(op.inputs[1]);
    switch (op.opcode) {
        case PcodeOpcode::INT_EQUAL: return a + " == " + b;
        case PcodeOpcode::INT_NOTEQUAL: return a + " != " + b;
        case PcodeOpcode::INT_SLESS: return a + " < " + b;
        case PcodeOpcode::INT_SLESSEQUAL: return a + " <= " + b;
        case PcodeOpcode::INT_LESS:
            return "(unsigned long)" + a + " < (unsigned long)" + b;
        case PcodeOpcode::INT_LESSEQUAL:
            return "(unsigned long)" + a + " <= (unsigned long)" + b;
        default: return a;
    }
}

std::string c_condition(const Varnode& cond, const std::vector<PcodeOp*>& defs) {
    if (cond.space != VarSpace::constant && cond.ssa_id >= 0 &&
        cond.ssa_id < static_cast<int>(defs.size()) && defs[cond.ssa_id]) {
        const PcodeOp& def = *defs[cond.ssa_id];
        if (is_comparison(def.opcode)) return c_comparison(def);
        if (def.opcode == PcodeOpcode::BOOL_NEGATE) {
            const Varnode& inner = def.inputs[0];
            if (inner.space != VarSpace::constant && inner.ssa_id >= 0 &&
                inner.ssa_id < static_cast<int>(defs.size()) && defs[inner.ssa_id] &&
                is_comparison(defs[inner.ssa_id]->opcode)) {
                return "!(" + c_comparison(*defs[inner.ssa_id]) + ")";
            }
            return "!" + c_value(inner);
        }
    }
    return c_value(cond);
}

} // namespace

std::string render_pseudo_c(const LiftedFunction& lf) {
    auto defs = def_table(const_cast<LiftedFunction&>(lf));
    bool returns_value = false;
    for (const auto& blk : lf.blocks) {
        for (const auto& op : blk.ops) {
            if (op.opcode == PcodeOpcode::RETURN && !op.inputs.empty()) returns_value = true;
        }
    }
    std::string out = returns_value ? "long " : "void ";
    out += lf.name + "(";
    for (size_t i = 0; i < lf.input_ids.size(); ++i) {
        if (i) out += ", ";
        const SsaValueInfo& v = lf.values[lf.input_ids[i]];
        out += std::string(c_type(v.width)) + " v" + std::to_string(v.id);
    }
    out += ") {\n";
    for (const auto& blk : lf.blocks) {
        out += blk.label + ":\n";
        if (blk.ops.empty()) out += "    ;\n";
        for (const PcodeOp& op : blk.ops) {
            std::string stmt;
            std::string x = op.output ? c_value(*op.output) : "";
            auto in = [&](size_t i) { return c_value(op.inputs[i]); };
            switch (op.opcode) {
                case PcodeOpcode::COPY: stmt = x + " = " + in(0) + ";"; break;
                case PcodeOpcode::LOAD:
                    stmt = x + " = *(" + c_type(op.output->width) + " *)" + in(0) + ";";
                    break;
                case PcodeOpcode::STORE:
                    stmt = "*(" + std::string(c_type(op.inputs[1].width)) + " *)" + in(0) +
                           " = " + in(1) + ";";
                    break;
                case PcodeOpcode::INT_ADD: stmt = x + " = " + in(0) + " + " + in(1) + ";"; break;
                case PcodeOpcode::INT_SUB: stmt = x + " = " + in(0) + " - " + in(1) + ";"; break;
                case PcodeOpcode::INT_MULT: stmt = x + " = " + in(0) + " * " + in(1) + ";"; break;
                case PcodeOpcode::INT_AND: stmt = x + " = " + in(0) + " & " + in(1) + ";"; break;
                case PcodeOpcode::INT_OR: stmt = x + " = " + in(0) + " | " + in(1) + ";"; break;
                case PcodeOpcode::INT_XOR: stmt = x + " = " + in(0) + " ^ " + in(1) + ";"; break;
                case PcodeOpcode::INT_LEFT:
                    stmt = x + " = " + in(0) + " << " + in(1) + ";";
                    break;
                case PcodeOpcode::INT_RIGHT:
                    stmt = x + " = (unsigned long)" + in(0) + " >> " + in(1) + ";";
                    break;
                case PcodeOpcode::INT_SRIGHT:
                    stmt = x + " = " + in(0) + " >> " + in(1) + ";";
                    break;
                case PcodeOpcode::INT_EQUAL:
                case PcodeOpcode::INT_NOTEQUAL:
                case PcodeOpcode::INT_LESS:
                case PcodeOpcode::INT_SLESS:
                case PcodeOpcode::INT_LESSEQUAL:
                case PcodeOpcode::INT_SLESSEQUAL:
                    stmt = x + " = (" + c_comparison(op) + ");";
                    break;
                case PcodeOpcode::BOOL_NEGATE: stmt = x + " = !" + in(0) + ";"; break;
                case PcodeOpcode::BOOL_AND:
                    stmt = x + " = (" + in(0) + " && " + in(1) + ");";
                    break;
                case PcodeOpcode::BOOL_OR:
                    stmt = x + " = (" + in(0) + " || " + in(1) + ");";
                    break;
                case PcodeOpcode::FLOAT_ADD: stmt = x + " = " + in(0) + " + " + in(1) + ";"; break;
                case PcodeOpcode::FLOAT_SUB: stmt = x + " = " + in(0) + " - " + in(1) + ";"; break;
                case PcodeOpcode::FLOAT_MULT:
                    stmt = x + " = " + in(0) + " * " + in(1) + ";";
                    break;
                case PcodeOpcode::FLOAT_DIV: stmt = x + " = " + in(0) + " / " + in(1) + ";"; break;
                case PcodeOpcode::CAST:
                    stmt = x + " = (long *)" + in(0) + ";";
                    break;
                case PcodeOpcode::SUBPIECE: {
                    uint64_t off = op.inputs[1].value;
                    std::string src = in(0);
                    if (off) src = "(" + src + " >> " + std::to_string(8 * off) + ")";
                    stmt = x + " = (" + c_type(op.output->width) + ")" + src + ";";
                    break;
                }
                case PcodeOpcode::INT_ZEXT:
                    stmt = x + " = (unsigned " + c_type(op.output->width) + ")" + in(0) + ";";
                    break;
                case PcodeOpcode::INT_SEXT:
                    stmt = x + " = (" + std::string(c_type(op.output->width)) + ")" + in(0) + ";";
                    break;
                case PcodeOpcode::PIECE:
                    stmt = x + " = ((long)" + in(0) + " << " +
                           std::to_string(8 * op.inputs[1].width) + ") | " + in(1) + ";";
                    break;
                case PcodeOpcode::PTRSUB:
                    if (op.inputs[0].space == VarSpace::constant && op.inputs[0].value == 0) {
                        stmt = x + " = (void *)" + in(1) + ";";
                    } else {
                        stmt = x + " = (char *)" + in(0) + " + " + in(1) + ";";
                    }
                    break;
                case PcodeOpcode::PTRADD:
                    stmt = x + " = (char *)" + in(0) + " + " + in(1) + " * " + in(2) + ";";
                    break;
                case PcodeOpcode::CALL:
                    stmt = (op.output ? x + " = " : "") + op.callee + "();";
                    break;
                case PcodeOpcode::CALLIND:
                    stmt = (op.output ? x + " = " : "") + "(*(code *)" + in(0) + ")();";
                    break;
                case PcodeOpcode::BRANCH: stmt = "goto " + op.target + ";"; break;
                case PcodeOpcode::CBRANCH:
                    stmt = "if (" + c_condition(op.inputs[0], defs) + ") goto " + op.target + ";";
                    break;
                case PcodeOpcode::BRANCHIND: stmt = "goto *" + in(0) + ";"; break;
                case PcodeOpcode::RETURN:
                    stmt = op.inputs.empty() ? "return;" : "return " + in(0) + ";";
                    break;
                case PcodeOpcode::PHI: {
                    stmt = x + " = PHI(";
                    for (size_t i = 0; i < op.inputs.size(); ++i) {
                        if (i) stmt += ", ";
                        stmt += c_value(op.inputs[i]);
                    }
                    stmt += ");";
                    break;
                }
            }
            out += "    " + stmt + "\n";
        }
    }
    out += "}\n";
    return out;
}

// ------------------------------------------------------------------ parsing

namespace {

struct PcodeParser {
    std::map<int, Varnode> seen; // id -> canonical shape
    int line_no = 0;

    [[noreturn]] void err(const std::string& what) {
        fail("PcodeSyntax", "line " + std::to_string(line_no) + ": " + what);
    }

    Varnode parse_value(std::string tok) {
        if (tok.empty()) err("empty operand");
        if (tok[0] != 'v') { // constant
            size_t colon = tok.rfind(':');
            if (colon == std::string::npos) err("constant missing width: " + tok);
            std::string num = tok.substr(0, colon);
            std::string w = tok.substr(colon + 1);
            Varnode v;
            v.space = VarSpace::constant;
            try {
                v.value = std::stoull(num, nullptr, 0);
                v.width = std::stoi(w);
            } catch (const std::exception&) {
                err("bad constant: " + tok);
            }
            return v;
        }
        Varnode v;
        size_t pos = 1;
        size_t colon = tok.find(':', pos);
        if (colon == std::string::npos) err("value missing width: " + tok);
        try {
            v.ssa_id = std::stoi(tok.substr(pos, colon - pos));
        } catch (const std::exception&) {
            err("bad value id: " + tok);
        }
        pos = colon + 1;
        size_t end = pos;
        while (end < tok.size() && std::isdigit(static_cast<unsigned char>(tok[end]))) ++end;
        if (end == pos) err("value missing width: " + tok);
        v.width = std::stoi(tok.substr(pos, end - pos));
        pos = end;
        v.space = VarSpace::unique;
        if (pos < tok.size() && tok[pos] == '@') {
            ++pos;
            if (tok.compare(pos, 6, "stack[") == 0) {
                size_t close = tok.find(']', pos);
                if (close == std::string::npos) err("unterminated stack slot: " + tok);
                std::string off = tok.substr(pos + 6, close - pos - 6);
                v.space = VarSpace::stack;
                try {
                    v.offset = std::stoll(off, nullptr, 0);
                } catch (const std::exception&) {
                    err("bad stack offset: " + tok);
                }
                pos = close + 1;
            } else {
                size_t end2 = pos;
                while (end2 < tok.size() && tok[end2] != '<') ++end2;
                std::string name = tok.substr(pos, end2 - pos);
                if (name.empty()) err("empty location: " + tok);
                v.space = name.size() == 2 && name[1] == 'F' ? VarSpace::flag : VarSpace::reg;
                v.reg = name;
                pos = end2;
            }
        }
        if (pos < tok.size() && tok[pos] == '<') {
            if (tok.back() != '>') err("unterminated type: " + tok);
            v.type = tok.substr(pos + 1, tok.size() - pos - 2);
            pos = tok.size();
        }
        if (pos != tok.size()) err("trailing characters: " + tok);
        auto it = seen.find(v.ssa_id);
        if (it == seen.end()) {
            seen[v.ssa_id] = v;
        } else if (!(it->second == v)) {
            err("inconsistent annotations for v" + std::to_string(v.ssa_id));
        }
        return v;
    }

    std::vector<std::string> split_args(const std::string& s) {
        std::vector<std::string> parts;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
        parts.push_back(cur);
        for (auto& p : parts) {
            size_t a = p.find_first_not_of(' ');
            size_t b = p.find_last_not_of(' ');
            p = a == std::string::npos ? "" : p.substr(a, b - a + 1);
        }
        return parts;
    }
};

} // namespace

LiftedFunction parse_pcode(const std::string& text) {
    LiftedFunction lf;
    PcodeParser P;
    std::istringstream in(text);
    std::string line;
    LiftedBlock* blk = nullptr;
    while (std::getline(in, line)) {
        P.line_no++;
        if (line.empty()) continue;
        if (line.back() == ':' && line.rfind("blk_", 0) == 0) {
            lf.blocks.push_back({line.substr(0, line.size() - 1), {}});
            lf.cfg.blocks.push_back(lf.blocks.back().label);
            blk = &lf.blocks.back();
            continue;
        }
        if (line.rfind("    ", 0) != 0) P.err("expected indented op or block header");
        if (!blk) P.err("op before first block header");
        std::string body = line.substr(4);
        PcodeOp op;

        auto parse_rhs = [&](const std::string& rhs) {
            if (rhs.rfind("PHI(", 0) == 0) {
                if (rhs.back() != ')') P.err("unterminated PHI");
                op.opcode = PcodeOpcode::PHI;
                for (const auto& a : P.split_args(rhs.substr(4, rhs.size() - 5))) {
                    op.inputs.push_back(P.parse_value(a));
                }
                return;
            }
            if (rhs.rfind("LOAD [", 0) == 0) {
                if (rhs.back() != ']') P.err("unterminated LOAD");
                op.opcode = PcodeOpcode::LOAD;
                op.inputs.push_back(P.parse_value(rhs.substr(6, rhs.size() - 7)));
                return;
            }
            if (rhs.rfind("CALLIND ", 0) == 0) {
                op.opcode = PcodeOpcode::CALLIND;
                op.inputs.push_back(P.parse_value(rhs.substr(8)));
                return;
            }
            if (rhs.rfind("CALL ", 0) == 0) {
                op.opcode = PcodeOpcode::CALL;
                op.callee = rhs.substr(5);
                if (op.callee.empty()) P.err("CALL missing callee");
                return;
            }
            size_t sp = rhs.find(' ');
            std::string opname = sp == std::string::npos ? rhs : rhs.substr(0, sp);
            auto opc = opcode_from_name(opname);
            if (!opc) P.err("unknown operation: " + opname);
            op.opcode = *opc;
            if (sp != std::string::npos) {
                for (const auto& a : P.split_args(rhs.substr(sp + 1))) {
                    op.inputs.push_back(P.parse_value(a));
                }
            }
        };

        if (body.rfind("STORE [", 0) == 0) {
            size_t close = body.find("], ");
            if (close == std::string::npos) P.err("malformed STORE");
            op.opcode = PcodeOpcode::STORE;
            op.inputs.push_back(P.parse_value(body.substr(7, close - 7)));
            op.inputs.push_back(P.parse_value(body.substr(close + 3)));
        } else if (body.rfind("BRANCHIND ", 0) == 0) {
            op.opcode = PcodeOpcode::BRANCHIND;
            op.inputs.push_back(P.parse_value(body.substr(10)));
        } else if (body.rfind("BRANCH ", 0) == 0) {
            op.opcode = PcodeOpcode::BRANCH;
            op.target = body.substr(7);
        } else if (body.rfind("CBRANCH ", 0) == 0) {
            op.opcode = PcodeOpcode::CBRANCH;
            size_t comma = body.find(", ");
            if (comma == std::string::npos) P.err("CBRANCH missing condition");
            op.target = body.substr(8, comma - 8);
            std::string expr = body.substr(comma + 2);
            // infix conditions restate the previous op; a bare token is the value
            bool negated = expr.rfind("!(", 0) == 0;
            bool infix = expr.find(" == ") != std::string::npos ||
                         expr.find(" != ") != std::string::npos ||
                         expr.find(" < ") != std::string::npos ||
                         expr.find(" <= ") != std::string::npos ||
                         expr.find(" <u ") != std::string::npos ||
                         expr.find(" <=u ") != std::string::npos;
            if (negated || infix || expr[0] == '!') {
                if (blk->ops.empty() || !blk->ops.back().output) {
                    P.err("CBRANCH condition has no defining op");
                }
                const PcodeOp& prev = blk->ops.back();
                bool prev_ok = is_comparison(prev.opcode) ||
                               prev.opcode == PcodeOpcode::BOOL_NEGATE ||
                               prev.opcode == PcodeOpcode::COPY;
                if (!prev_ok) P.err("CBRANCH condition does not match preceding op");
                op.inputs.push_back(*prev.output);
            } else {
                op.inputs.push_back(P.parse_value(expr));
            }
        } else if (body == "RETURN") {
            op.opcode = PcodeOpcode::RETURN;
        } else if (body.rfind("RETURN ", 0) == 0) {
            op.opcode = PcodeOpcode::RETURN;
            op.inputs.push_back(P.parse_value(body.substr(7)));
        } else {
            size_t eq = body.find(" = ");
            if (eq == std::string::npos) P.err("expected assignment or control op");
            op.output = P.parse_value(body.substr(0, eq));
            parse_rhs(body.substr(eq + 3));
        }
        blk->ops.push_back(std::move(op));
    }

    // rebuild the value table; ids defined by no op are function inputs
    int max_id = -1;
    for (const auto& [id, vn] : P.seen) max_id = std::max(max_id, id);
    lf.values.assign(max_id + 1, SsaValueInfo{});
    std::set<int> defined;
    for (const auto& b : lf.blocks) {
        for (const auto& o : b.ops) {
            if (o.output && o.output->ssa_id >= 0) defined.insert(o.output->ssa_id);
        }
    }
    for (const auto& [id, vn] : P.seen) {
        SsaValueInfo info;
        info.id = id;
        info.width = vn.width;
        info.space = vn.space;
        info.reg = vn.reg;
        info.offset = vn.offset;
        info.type = vn.type;
        info.is_input = !defined.count(id);
        lf.values[id] = info;
        if (info.is_input) lf.input_ids.push_back(id);
    }
    std::sort(lf.input_ids.begin(), lf.input_ids.end());
    return lf;
}

} // namespace binoracle
