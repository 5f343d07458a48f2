#include "binoracle/flow.hpp"

#include <algorithm>
#include <set>

namespace binoracle {
namespace {

const Section* executable_section_at(const BinaryImage& img, uint64_t va) {
    const Section* s = img.section_containing(va);
    return s && s->executable && s->initialized ? s : nullptr;
}

Instruction decode_at(const BinaryImage& img, const Section* s, uint64_t va) {
    size_t off = va - s->va;
    return decode_instruction(s->bytes.data() + off, s->bytes.size() - off, va);
}

std::string synthetic_name(uint64_t va) {
    char buf[32];
    snprintf(buf, sizeof buf, "sub_%llx", static_cast<unsigned long long>(va));
    return buf;
}

// Explores reachable instructions from entry. Jumps to other seeds are tail
// calls and end the path; calls continue past the call site.
std::map<uint64_t, Instruction> descend(const BinaryImage& img, uint64_t entry,
                                        const std::set<uint64_t>& seeds) {
    std::map<uint64_t, Instruction> insns;
    std::vector<uint64_t> work = {entry};
    while (!work.empty()) {
        uint64_t va = work.back();
        work.pop_back();
        if (insns.count(va)) continue;
        const Section* s = executable_section_at(img, va);
        if (!s) continue;
        Instruction insn = decode_at(img, s, va);
        uint64_t next = va + insn.length;
        Flow flow = insn.flow;
        std::optional<uint64_t> target = insn.static_target;
        insns.emplace(va, std::move(insn));
        switch (flow) {
            case Flow::sequential:
            case Flow::call:
                work.push_back(next);
                break;
            case Flow::cond_jump:
                work.push_back(next);
                if (target && !(seeds.count(*target) && *target != entry)) {
                    work.push_back(*target);
                }
                break;
            case Flow::jump:
                if (target && !(seeds.count(*target) && *target != entry)) {
                    work.push_back(*target);
                }
                break;
            case Flow::ret:
            case Flow::halt:
            case Flow::invalid:
                break;
        }
    }
    return insns;
}

} // namespace

const Instruction* FunctionRecord::instruction_at(uint64_t va) const {
    auto it = std::lower_bound(instructions.begin(), instructions.end(), va,
                               [](const Instruction& i, uint64_t v) { return i.va < v; });
    return it != instructions.end() && it->va == va ? &*it : nullptr;
}

const FunctionRecord* Program::by_name(const std::string& name) const {
    for (const auto& f : functions) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

const FunctionRecord* Program::by_entry(uint64_t va) const {
    auto it = std::lower_bound(functions.begin(), functions.end(), va,
                               [](const FunctionRecord& f, uint64_t v) { return f.entry_va < v; });
    return it != functions.end() && it->entry_va == va ? &*it : nullptr;
}

std::optional<std::string> resolve_thunk(const BinaryImage& img, uint64_t va) {
    const Section* s = executable_section_at(img, va);
    if (!s) return std::nullopt;
    Instruction insn = decode_at(img, s, va);
    if (insn.flow != Flow::jump || insn.operands.size() != 1) return std::nullopt;
    const Operand& op = insn.operands[0];
    if (op.kind != OperandKind::mem || !op.rip_relative) return std::nullopt;
    auto slot = insn.rip_target();
    if (!slot) return std::nullopt;
    auto it = img.import_slots.find(*slot);
    if (it == img.import_slots.end()) return std::nullopt;
    return it->second;
}

Program discover_functions(const BinaryImage& img, bool use_symbols) {
    Program prog;
    std::set<uint64_t> seeds;
    for (uint64_t va : entry_points(img)) {
        if (executable_section_at(img, va)) seeds.insert(va);
    }

    for (const auto& s : img.sections) {
        if (!s.executable || !s.initialized || s.bytes.empty()) continue;
        auto insns = linear_sweep(s);
        for (size_t i = 0; i < insns.size(); ++i) {
            const Instruction& insn = insns[i];
            if (insn.flow == Flow::call && insn.static_target &&
                executable_section_at(img, *insn.static_target)) {
                seeds.insert(*insn.static_target);
            }
            // catalog every import stub, called or not
            if (insn.flow == Flow::jump && insn.operands.size() == 1 &&
                insn.operands[0].kind == OperandKind::mem &&
                insn.operands[0].rip_relative) {
                if (auto slot = insn.rip_target()) {
                    auto it = img.import_slots.find(*slot);
                    if (it != img.import_slots.end()) prog.thunks[insn.va] = it->second;
                }
            }
            // push rbp; mov rbp,rsp in either common encoding
            if (insn.mnemonic == "push" && insn.operands.size() == 1 &&
                insn.operands[0].kind == OperandKind::reg && insn.operands[0].reg == "rbp" &&
                i + 1 < insns.size()) {
                const Instruction& next = insns[i + 1];
                if (next.mnemonic == "mov" && next.operands.size() == 2 &&
                    next.operands[0].kind == OperandKind::reg &&
                    next.operands[0].reg == "rbp" &&
                    next.operands[1].kind == OperandKind::reg &&
                    next.operands[1].reg == "rsp") {
                    seeds.insert(insn.va);
                }
            }
        }
    }

    for (auto it = seeds.begin(); it != seeds.end();) {
        if (auto import = resolve_thunk(img, *it)) {
            prog.thunks[*it] = *import;
            it = seeds.erase(it);
        } else {
            ++it;
        }
    }

    std::map<uint64_t, std::string> symbol_names;
    if (use_symbols) {
        for (const auto& sym : img.symbols) {
            if (sym.defined && sym.is_function && !sym.absolute && !sym.name.empty()) {
                symbol_names.emplace(sym.va, sym.name);
            }
        }
    }

    std::set<std::string> used_names;
    for (uint64_t entry : seeds) {
        auto insns = descend(img, entry, seeds);
        if (insns.empty()) continue;
        FunctionRecord f;
        f.entry_va = entry;
        auto named = symbol_names.find(entry);
        if (named != symbol_names.end() && !used_names.count(named->second)) {
            f.name = named->second;
        } else {
            f.name = synthetic_name(entry);
        }
        used_names.insert(f.name);
        uint64_t end = entry;
        for (auto& [va, insn] : insns) {
            end = std::max(end, va + insn.length);
            f.instructions.push_back(std::move(insn));
        }
        f.size_bytes = end - entry;
        build_cfg(f); // assigns block labels
        prog.functions.push_back(std::move(f));
    }
    return prog;
}

Cfg build_cfg(FunctionRecord& f) {
    Cfg cfg;
    cfg.function = f.name;
    cfg.entry_block = "blk_0";
    if (f.instructions.empty()) return cfg;

    std::set<uint64_t> vas;
    for (const auto& i : f.instructions) vas.insert(i.va);
    auto inside = [&](uint64_t va) { return vas.count(va) > 0; };

    std::set<uint64_t> leaders = {f.entry_va};
    for (const auto& i : f.instructions) {
        if (i.flow == Flow::jump || i.flow == Flow::cond_jump) {
            if (i.static_target && inside(*i.static_target)) leaders.insert(*i.static_target);
            if (inside(i.va + i.length)) leaders.insert(i.va + i.length);
        }
        if ((i.flow == Flow::ret || i.flow == Flow::halt || i.flow == Flow::invalid) &&
            inside(i.va + i.length)) {
            leaders.insert(i.va + i.length);
        }
    }

    // Carve [leader, next leader) runs; a terminator also ends a block.
    std::map<uint64_t, std::vector<uint64_t>> block_of_leader;
    std::map<uint64_t, uint64_t> leader_of_va;
    uint64_t current = 0;
    for (const auto& i : f.instructions) {
        if (leaders.count(i.va)) current = i.va;
        if (block_of_leader.find(current) == block_of_leader.end() && current != i.va) {
            // instruction before the entry leader (shouldn't happen; be safe)
            current = i.va;
            leaders.insert(current);
        }
        block_of_leader[current].push_back(i.va);
        leader_of_va[i.va] = current;
        if (i.flow != Flow::sequential && i.flow != Flow::call) {
            current = i.va + i.length; // next instruction (if any) starts a block
            leaders.insert(current);
        }
    }
    for (auto it = leaders.begin(); it != leaders.end();) {
        if (!block_of_leader.count(*it)) {
            it = leaders.erase(it);
        } else {
            ++it;
        }
    }

    // Successor map in terms of leader VAs, tagged with edge types.
    struct Succ {
        uint64_t to;
        std::string type;
    };
    std::map<uint64_t, std::vector<Succ>> succs;
    for (const auto& [leader, insn_vas] : block_of_leader) {
        const Instruction* term = f.instruction_at(insn_vas.back());
        uint64_t next = term->va + term->length;
        switch (term->flow) {
            case Flow::cond_jump:
                if (term->static_target && inside(*term->static_target)) {
                    succs[leader].push_back({leader_of_va[*term->static_target], "branch_true"});
                }
                if (inside(next)) succs[leader].push_back({leader_of_va[next], "branch_false"});
                break;
            case Flow::jump:
                if (term->static_target && inside(*term->static_target)) {
                    succs[leader].push_back({leader_of_va[*term->static_target], "unconditional"});
                }
                break;
            case Flow::sequential:
            case Flow::call:
                if (inside(next)) succs[leader].push_back({leader_of_va[next], "fallthrough"});
                break;
            case Flow::ret:
            case Flow::halt:
            case Flow::invalid:
                break;
        }
    }

    // Reverse post-order from entry; successors visited in descending VA
    // order so lower-address blocks come out earlier (ascending tie-break).
    std::vector<uint64_t> postorder;
    std::set<uint64_t> visited;
    std::vector<std::pair<uint64_t, size_t>> stack = {{f.entry_va, 0}};
    visited.insert(f.entry_va);
    while (!stack.empty()) {
        auto& [va, idx] = stack.back();
        std::vector<uint64_t> kids;
        for (const auto& s : succs[va]) kids.push_back(s.to);
        std::sort(kids.begin(), kids.end(), std::greater<>());
        kids.erase(std::unique(kids.begin(), kids.end()), kids.end());
        if (idx < kids.size()) {
            uint64_t kid = kids[idx++];
            if (!visited.count(kid)) {
                visited.insert(kid);
                stack.push_back({kid, 0});
            }
        } else {
            postorder.push_back(va);
            stack.pop_back();
        }
    }
    std::map<uint64_t, size_t> order;
    for (size_t i = 0; i < postorder.size(); ++i) {
        order[postorder[postorder.size() - 1 - i]] = i;
    }
    for (const auto& [leader, _] : block_of_leader) {
        if (!order.count(leader)) order[leader] = order.size(); // unreachable tail
    }

    f.blocks.assign(order.size(), BasicBlock{});
    for (const auto& [leader, insn_vas] : block_of_leader) {
        BasicBlock& b = f.blocks[order[leader]];
        b.label = "blk_" + std::to_string(order[leader]);
        b.insn_vas = insn_vas;
    }
    for (const auto& b : f.blocks) cfg.blocks.push_back(b.label);
    for (const auto& [leader, out] : succs) {
        for (const auto& s : out) {
            cfg.edges.push_back({"blk_" + std::to_string(order[leader]),
                                 "blk_" + std::to_string(order[s.to]), s.type});
        }
    }
    std::sort(cfg.edges.begin(), cfg.edges.end(), [](const CfgEdge& a, const CfgEdge& b) {
        return std::tie(a.source, a.target, a.edge_type) <
               std::tie(b.source, b.target, b.edge_type);
    });
    return cfg;
}

CallGraph build_call_graph(const Program& prog, const BinaryImage& img) {
    CallGraph graph;
    std::map<uint64_t, const FunctionRecord*> by_entry;
    for (const auto& f : prog.functions) by_entry[f.entry_va] = &f;

    for (const auto& f : prog.functions) {
        std::set<std::string> import_callees;
        std::set<uint64_t> internal_callees;
        for (const auto& insn : f.instructions) {
            bool is_call = insn.flow == Flow::call;
            bool is_tail = insn.flow == Flow::jump;
            if (!is_call && !is_tail) continue;

            if (insn.static_target) {
                uint64_t tgt = *insn.static_target;
                auto thunk = prog.thunks.find(tgt);
                if (thunk != prog.thunks.end()) {
                    import_callees.insert(thunk->second);
                } else if (by_entry.count(tgt) && (is_call || tgt != f.entry_va)) {
                    // a jump back to our own entry is a loop, not a tail call
                    internal_callees.insert(tgt);
                }
                continue;
            }
            // call/jmp [rip+disp] straight through an import slot
            if (auto rip = insn.rip_target()) {
                auto slot = img.import_slots.find(*rip);
                if (slot != img.import_slots.end()) import_callees.insert(slot->second);
            }
        }
        auto& out = graph.callees[f.name];
        out.assign(import_callees.begin(), import_callees.end());
        for (uint64_t va : internal_callees) out.push_back(by_entry[va]->name);
    }

    // transpose, callers in ascending entry order (iteration order of
    // prog.functions is ascending already)
    for (const auto& f : prog.functions) graph.callers[f.name]; // ensure key
    for (const auto& f : prog.functions) {
        for (const auto& callee : graph.callees[f.name]) {
            graph.callers[callee].push_back(f.name);
        }
    }
    return graph;
}

} // namespace binoracle
