#include "binoracle/queryapi.hpp"

#include "binoracle/error.hpp"
#include "binoracle/lift.hpp"
#include "binoracle/sha256.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>
#include <unistd.h>

namespace binoracle {

namespace fs = std::filesystem;
using nlohmann::json;

const int kAnalysisFormatVersion = 1;

std::string cache_directory() {
    if (const char* dir = std::getenv("BINORACLE_CACHE_DIR")) return dir;
    return (fs::temp_directory_path() / "binoracle-cache").string();
}

void validate_pattern(const std::string& pattern) {
    bool in_class = false;
    for (size_t i = 0; i + 1 < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '\\') {
            char n = pattern[i + 1];
            if (n >= '1' && n <= '9') {
                fail("InvalidPattern", "backreferences are not supported");
            }
            if (n == 'k') fail("InvalidPattern", "named backreferences are not supported");
            ++i; // the escaped character is spoken for
            continue;
        }
        if (c == '[') in_class = true;
        if (c == ']') in_class = false;
        if (in_class) continue;
        if (c == '(' && pattern[i + 1] == '?') {
            // only non-capturing groups pass; lookaround and named groups do not
            if (i + 2 >= pattern.size() || pattern[i + 2] != ':') {
                fail("InvalidPattern", "only (?: ...) groups are supported");
            }
        }
    }
    try {
        std::regex probe(pattern, std::regex::ECMAScript);
    } catch (const std::regex_error& e) {
        fail("InvalidPattern", e.what());
    }
}

namespace {

std::string hex_va(uint64_t va) {
    char buf[24];
    snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(va));
    return buf;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

// string literals a function's instructions point at, via immediates,
// rip-relative targets, or absolute memory displacements
std::vector<std::string> referenced_strings(const FunctionRecord& f,
                                            const std::vector<StringLiteral>& lits) {
    std::vector<std::pair<uint64_t, const StringLiteral*>> by_va;
    by_va.reserve(lits.size());
    for (const auto& lit : lits) by_va.emplace_back(lit.va, &lit);
    std::sort(by_va.begin(), by_va.end());

    auto containing = [&](uint64_t va) -> const StringLiteral* {
        auto it = std::upper_bound(by_va.begin(), by_va.end(),
                                   std::make_pair(va, (const StringLiteral*)nullptr),
                                   [](const auto& a, const auto& b) { return a.first < b.first; });
        if (it == by_va.begin()) return nullptr;
        --it;
        const StringLiteral* lit = it->second;
        return va < lit->va + lit->text.size() ? lit : nullptr;
    };

    std::set<std::string> found;
    for (const Instruction& insn : f.instructions) {
        std::vector<uint64_t> candidates;
        if (auto rip = insn.rip_target()) candidates.push_back(*rip);
        for (const Operand& op : insn.operands) {
            if (op.kind == OperandKind::imm) {
                candidates.push_back(static_cast<uint64_t>(op.imm));
            } else if (op.kind == OperandKind::mem && !op.rip_relative && op.base.empty() &&
                       op.index.empty()) {
                candidates.push_back(static_cast<uint64_t>(op.disp));
            }
        }
        for (uint64_t va : candidates) {
            if (const StringLiteral* lit = containing(va)) found.insert(lit->text);
        }
    }
    return {found.begin(), found.end()};
}

json cfg_to_json(const Cfg& cfg) {
    json edges = json::array();
    for (const auto& e : cfg.edges) {
        edges.push_back({{"source", e.source}, {"target", e.target}, {"edge_type", e.edge_type}});
    }
    return {{"function", cfg.function},
            {"blocks", cfg.blocks},
            {"entry_block", cfg.entry_block},
            {"edges", edges}};
}

json analyze(const BinaryImage& img, bool strict, const std::string& hash) {
    Program prog = discover_functions(img, /*use_symbols=*/!strict);
    CallGraph graph = build_call_graph(prog, img);
    std::vector<StringLiteral> lits = extract_strings(img);

    std::vector<std::string> import_names;
    for (const auto& imp : extract_imports(img)) import_names.push_back(imp.name);
    std::sort(import_names.begin(), import_names.end());
    import_names.erase(std::unique(import_names.begin(), import_names.end()),
                       import_names.end());

    std::vector<std::string> string_texts;
    for (const auto& lit : lits) string_texts.push_back(lit.text);
    std::sort(string_texts.begin(), string_texts.end());

    json functions = json::array();
    for (auto& f : prog.functions) {
        Cfg cfg = build_cfg(f);
        LiftedFunction lf = lift_function(f, cfg, img, prog);
        construct_ssa(lf);
        functions.push_back({{"name", f.name},
                             {"address", f.entry_va},
                             {"size_bytes", f.size_bytes},
                             {"num_blocks", f.blocks.size()},
                             {"cfg", cfg_to_json(cfg)},
                             {"decompiled", render_pseudo_c(lf)},
                             {"pcode", render_pcode(lf)},
                             {"assembly", render_assembly(f)},
                             {"strings", referenced_strings(f, lits)}});
    }

    json callees = json::object(), callers = json::object();
    for (const auto& [name, list] : graph.callees) callees[name] = list;
    for (const auto& [name, list] : graph.callers) callers[name] = list;

    return {{"format_version", kAnalysisFormatVersion},
            {"hash", hash},
            {"strict", strict},
            {"functions", functions},
            {"imports", import_names},
            {"strings", string_texts},
            {"callees", callees},
            {"callers", callers}};
}

template <typename T>
Page<T> paginate(const std::vector<T>& all, int64_t offset, int64_t limit) {
    if (offset < 0 || limit < 1) {
        fail("InvalidPage", "offset must be >= 0 and limit >= 1");
    }
    Page<T> page;
    page.total = static_cast<int64_t>(all.size());
    page.offset = offset;
    if (offset < page.total) {
        int64_t end = std::min(page.total, offset + limit);
        page.items.assign(all.begin() + offset, all.begin() + end);
    }
    page.returned = static_cast<int64_t>(page.items.size());
    if (offset + page.returned < page.total) page.next_offset = offset + page.returned;
    return page;
}

} // namespace

ApiHandle ApiHandle::open(const std::string& path, bool strict) {
    BinaryImage img = load_binary(path);
    std::string hash = to_hex(img.content_hash);

    fs::path dir(cache_directory());
    fs::path file = dir / (hash + (strict ? ".strict.analysis" : ".analysis"));

    ApiHandle handle;
    std::error_code ec;
    if (fs::exists(file, ec)) {
        std::ifstream in(file, std::ios::binary);
        json cached = json::parse(in, nullptr, /*allow_exceptions=*/false);
        // any corruption, stale version, or key mismatch falls back to re-analysis
        if (!cached.is_discarded() && cached.is_object() &&
            cached.value("format_version", -1) == kAnalysisFormatVersion &&
            cached.value("hash", "") == hash && cached.value("strict", !strict) == strict) {
            handle.payload_ = std::move(cached);
            handle.from_cache_ = true;
            return handle;
        }
    }

    handle.payload_ = analyze(img, strict, hash);
    fs::create_directories(dir, ec);
    fs::path tmp = dir / (file.filename().string() + ".tmp." +
                          std::to_string(static_cast<unsigned long>(::getpid())));
    {
        std::ofstream out(tmp, std::ios::binary);
        out << handle.payload_.dump();
    }
    fs::rename(tmp, file, ec);
    if (ec) fs::remove(tmp, ec); // another open won the race; its payload is identical
    return handle;
}

const json& ApiHandle::function_entry(const std::string& func) const {
    for (const auto& f : payload_.at("functions")) {
        if (f.at("name").get_ref<const std::string&>() == func) return f;
    }
    fail("UnknownName", "no function named " + func);
}

Page<FunctionInfo> ApiHandle::list_functions(int64_t offset, int64_t limit) const {
    std::vector<FunctionInfo> all;
    for (const auto& f : payload_.at("functions")) {
        all.push_back({f.at("name").get<std::string>(),
                       hex_va(f.at("address").get<uint64_t>()),
                       f.at("size_bytes").get<uint64_t>(),
                       f.at("num_blocks").get<int>()});
    }
    return paginate(all, offset, limit);
}

Page<std::string> ApiHandle::get_imports(int64_t offset, int64_t limit) const {
    return paginate(payload_.at("imports").get<std::vector<std::string>>(), offset, limit);
}

Page<std::string> ApiHandle::get_strings(int64_t offset, int64_t limit) const {
    return paginate(payload_.at("strings").get<std::vector<std::string>>(), offset, limit);
}

std::vector<std::string> ApiHandle::find_callers_of_import(const std::string& name) const {
    const json& callers = payload_.at("callers");
    auto it = callers.find(name);
    // absent import is an empty answer, not an error
    if (it == callers.end()) return {};
    // only import keys are interesting here; a function name used as an
    // import query still answers from the same transpose
    return it->get<std::vector<std::string>>();
}

std::vector<std::string> ApiHandle::find_functions_referencing_string(
    const std::string& needle, bool case_sensitive) const {
    std::string want = case_sensitive ? needle : lower(needle);
    std::vector<std::string> out;
    for (const auto& f : payload_.at("functions")) {
        for (const auto& s : f.at("strings")) {
            std::string text = s.get<std::string>();
            if (!case_sensitive) text = lower(text);
            if (text.find(want) != std::string::npos) {
                out.push_back(f.at("name").get<std::string>());
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> ApiHandle::get_callees(const std::string& func) const {
    function_entry(func); // UnknownName on imports and typos
    const json& callees = payload_.at("callees");
    auto it = callees.find(func);
    return it == callees.end() ? std::vector<std::string>{}
                               : it->get<std::vector<std::string>>();
}

std::vector<std::string> ApiHandle::get_callers(const std::string& func) const {
    function_entry(func);
    const json& callers = payload_.at("callers");
    auto it = callers.find(func);
    return it == callers.end() ? std::vector<std::string>{}
                               : it->get<std::vector<std::string>>();
}

std::string ApiHandle::decompile(const std::string& func) const {
    return function_entry(func).at("decompiled").get<std::string>();
}

std::string ApiHandle::get_pcode(const std::string& func) const {
    return function_entry(func).at("pcode").get<std::string>();
}

std::string ApiHandle::get_assembly(const std::string& func) const {
    return function_entry(func).at("assembly").get<std::string>();
}

Cfg ApiHandle::get_cfg(const std::string& func) const {
    const json& j = function_entry(func).at("cfg");
    Cfg cfg;
    cfg.function = j.at("function").get<std::string>();
    cfg.blocks = j.at("blocks").get<std::vector<std::string>>();
    cfg.entry_block = j.at("entry_block").get<std::string>();
    for (const auto& e : j.at("edges")) {
        cfg.edges.push_back({e.at("source").get<std::string>(),
                             e.at("target").get<std::string>(),
                             e.at("edge_type").get<std::string>()});
    }
    return cfg;
}

SearchResults ApiHandle::search(const std::string& repr, const std::string& pattern,
                                int64_t limit) const {
    if (limit < 1) fail("InvalidPage", "limit must be >= 1");
    validate_pattern(pattern);
    std::regex re(pattern, std::regex::ECMAScript);

    SearchResults out;
    out.limit = limit;
    bool full = false;
    for (const auto& f : payload_.at("functions")) {
        if (full && out.truncated) break;
        std::string name = f.at("name").get<std::string>();
        std::istringstream text(f.at(repr).get_ref<const std::string&>());
        std::string line;
        FunctionMatches group;
        group.function = name;
        int line_no = 0;
        while (std::getline(text, line)) {
            ++line_no;
            for (auto it = std::sregex_iterator(line.begin(), line.end(), re);
                 it != std::sregex_iterator(); ++it) {
                if (full) {
                    // one more match proves the cut dropped something
                    out.truncated = true;
                    break;
                }
                group.matches.push_back({name, line_no, line, it->str()});
                ++group.match_count;
                ++out.total_match_count;
                full = out.total_match_count >= limit;
            }
            if (out.truncated) break;
        }
        if (group.match_count > 0) out.results.push_back(std::move(group));
    }
    return out;
}

SearchResults ApiHandle::search_decompiled(const std::string& pattern, int64_t limit) const {
    return search("decompiled", pattern, limit);
}

SearchResults ApiHandle::search_pcode(const std::string& pattern, int64_t limit) const {
    return search("pcode", pattern, limit);
}

SearchResults ApiHandle::search_assembly(const std::string& pattern, int64_t limit) const {
    return search("assembly", pattern, limit);
}

} // namespace binoracle
