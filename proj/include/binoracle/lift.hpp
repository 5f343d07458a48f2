#pragma once

#include "binoracle/container.hpp"
#include "binoracle/disasm.hpp"
#include "binoracle/flow.hpp"

#include <optional>
#include <string>
#include <vector>

namespace binoracle {

enum class PcodeOpcode {
    COPY, LOAD, STORE,
    INT_ADD, INT_SUB, INT_MULT, INT_AND, INT_OR, INT_XOR,
    INT_LEFT, INT_RIGHT, INT_SRIGHT,
    INT_EQUAL, INT_NOTEQUAL, INT_LESS, INT_SLESS, INT_LESSEQUAL, INT_SLESSEQUAL,
    BOOL_NEGATE, BOOL_AND, BOOL_OR,
    FLOAT_ADD, FLOAT_SUB, FLOAT_MULT, FLOAT_DIV,
    CALL, CALLIND, CBRANCH, BRANCH, BRANCHIND, RETURN,
    CAST, SUBPIECE, INT_ZEXT, INT_SEXT, PIECE, PTRADD, PTRSUB, PHI,
};

const char* opcode_name(PcodeOpcode op);
std::optional<PcodeOpcode> opcode_from_name(const std::string& name);

enum class VarSpace { unique, reg, stack, flag, constant };

// One operand slot. Location varnodes gain an ssa_id during SSA construction;
// constants keep ssa_id == -1 forever.
struct Varnode {
    VarSpace space = VarSpace::unique;
    int width = 8;
    std::string reg;     // register or flag name, upper-case ("RAX", "ZF")
    int64_t offset = 0;  // stack slot offset, or unique sequence number
    uint64_t value = 0;  // constant payload
    int ssa_id = -1;
    std::string type;    // "", "bool", "longlong", "longlong *", ...

    bool operator==(const Varnode&) const = default;
};

Varnode make_const(uint64_t value, int width);

struct PcodeOp {
    PcodeOpcode opcode = PcodeOpcode::COPY;
    std::optional<Varnode> output;
    std::vector<Varnode> inputs;
    std::string callee;  // CALL only
    std::string target;  // BRANCH / CBRANCH block label
    uint64_t va = 0;     // originating instruction

    bool operator==(const PcodeOp&) const = default;
};

struct LiftedBlock {
    std::string label;
    std::vector<PcodeOp> ops;
};

struct SsaValueInfo {
    int id = -1;
    int width = 8;
    VarSpace space = VarSpace::unique;
    std::string reg;
    int64_t offset = 0;
    std::string type;
    bool is_input = false;  // no defining op; seeded from the caller's state
};

struct LiftedFunction {
    std::string name;
    Cfg cfg;                          // labels and typed edges, blk_i = blocks[i]
    std::vector<LiftedBlock> blocks;  // label order
    std::vector<SsaValueInfo> values; // indexed by ssa id after construct_ssa
    std::vector<int> input_ids;
};

struct UnsupportedInstruction {
    uint64_t va = 0;
    std::string mnemonic;
};

// Per-mnemonic translation of one basic block (pre-SSA: location varnodes
// carry no ids yet). Mnemonics outside the subset truncate the block and are
// reported through `unsupported`.
std::vector<PcodeOp> lift_block(const FunctionRecord& f, const BasicBlock& b,
                                const Cfg& cfg, const BinaryImage& img,
                                const Program& prog,
                                std::vector<UnsupportedInstruction>* unsupported = nullptr);

LiftedFunction lift_function(const FunctionRecord& f, const Cfg& cfg,
                             const BinaryImage& img, const Program& prog,
                             std::vector<UnsupportedInstruction>* unsupported = nullptr);

// Dominance-frontier PHI insertion (filtered by liveness), dominator-tree
// renaming, then one numbering pass that assigns sequential ids in
// first-appearance order over blocks in label order.
void construct_ssa(LiftedFunction& lf);

// Returns human-readable violations; empty means the invariants hold.
std::vector<std::string> validate_ssa(const LiftedFunction& lf);

std::string render_pcode(const LiftedFunction& lf);
std::string render_assembly(const FunctionRecord& f);
std::string render_pseudo_c(const LiftedFunction& lf);

// Parses text produced by render_pcode back into blocks + ops + values.
// Throws Error("PcodeSyntax") on malformed input.
LiftedFunction parse_pcode(const std::string& text);

} // namespace binoracle
