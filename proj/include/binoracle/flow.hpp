#pragma once

#include "binoracle/container.hpp"
#include "binoracle/disasm.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace binoracle {

struct BasicBlock {
    std::string label; // blk_N, N assigned in reverse post-order from entry
    std::vector<uint64_t> insn_vas;
};

struct CfgEdge {
    std::string source;
    std::string target;
    std::string edge_type; // fallthrough | branch_true | branch_false | unconditional
    bool operator==(const CfgEdge&) const = default;
};

struct Cfg {
    std::string function;
    std::vector<std::string> blocks;
    std::string entry_block; // always blk_0
    std::vector<CfgEdge> edges;
};

struct FunctionRecord {
    std::string name; // symbol name when available, else sub_<hex entry>
    uint64_t entry_va = 0;
    uint64_t size_bytes = 0;
    std::vector<Instruction> instructions; // ascending VA
    std::vector<BasicBlock> blocks;        // blk_0 first

    size_t num_blocks() const { return blocks.size(); }
    const Instruction* instruction_at(uint64_t va) const;
};

struct CallGraph {
    // Callee lists hold imports first (alphabetical), then internal functions
    // by ascending entry address. Caller lists are the transpose, internals
    // by address.
    std::map<std::string, std::vector<std::string>> callees;
    std::map<std::string, std::vector<std::string>> callers;
};

struct Program {
    std::vector<FunctionRecord> functions;  // ascending entry VA
    std::map<uint64_t, std::string> thunks; // thunk entry VA -> import name

    const FunctionRecord* by_name(const std::string& name) const;
    const FunctionRecord* by_entry(uint64_t va) const;
};

// A thunk is a lone `jmp [rip+disp]` whose slot the loader binds to an
// import. Returns the import name when va starts such a stub.
std::optional<std::string> resolve_thunk(const BinaryImage& img, uint64_t va);

// Seeds are container entry points, direct call targets found by linear
// sweep, and `push rbp; mov rbp,rsp` prologue matches; each is expanded by
// recursive descent. Thunks are cataloged separately, not as functions.
// use_symbols=false forces synthetic sub_<hex> names everywhere.
Program discover_functions(const BinaryImage& img, bool use_symbols = true);

// Computes leaders, edges, and reverse post-order labels; fills f.blocks.
Cfg build_cfg(FunctionRecord& f);

CallGraph build_call_graph(const Program& prog, const BinaryImage& img);

} // namespace binoracle
