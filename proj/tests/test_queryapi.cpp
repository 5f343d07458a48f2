#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "binoracle/container.hpp"
#include "binoracle/error.hpp"
#include "binoracle/queryapi.hpp"
#include "binoracle/rng.hpp"
#include "binoracle/sha256.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

using namespace binoracle;
namespace fs = std::filesystem;

namespace {

// isolate every test run's cache from the machine and from previous runs
struct CacheEnv {
    CacheEnv() {
        char tmpl[] = "/tmp/binoracle-test-cache-XXXXXX";
        setenv("BINORACLE_CACHE_DIR", mkdtemp(tmpl), 1);
    }
} cache_env;

std::string fixture_path(const std::string& name) {
    const char* dir = std::getenv("BINORACLE_FIXTURES");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

std::string cache_file_for(const std::string& fixture, bool strict = false) {
    BinaryImage img = load_binary(fixture_path(fixture));
    return cache_directory() + "/" + to_hex(img.content_hash) +
           (strict ? ".strict.analysis" : ".analysis");
}

template <typename F>
std::string error_code_of(F&& call) {
    try {
        call();
    } catch (const Error& e) {
        return e.code();
    }
    return "";
}

} // namespace

TEST_CASE("warm opens serve the stored analysis unchanged") {
    fs::remove(cache_file_for("elf_calls.bin"));
    ApiHandle cold = ApiHandle::open(fixture_path("elf_calls.bin"));
    CHECK(!cold.loaded_from_cache());
    ApiHandle warm = ApiHandle::open(fixture_path("elf_calls.bin"));
    CHECK(warm.loaded_from_cache());
    CHECK(cold.payload().dump() == warm.payload().dump());
}

TEST_CASE("corrupt or stale cache entries trigger silent re-analysis") {
    std::string file = cache_file_for("elf_ret.bin");
    fs::remove(file);
    ApiHandle cold = ApiHandle::open(fixture_path("elf_ret.bin"));
    std::string want = cold.payload().dump();

    SUBCASE("payload truncated on disk") {
        auto size = fs::file_size(file);
        fs::resize_file(file, size / 2);
        ApiHandle again = ApiHandle::open(fixture_path("elf_ret.bin"));
        CHECK(!again.loaded_from_cache());
        CHECK(again.payload().dump() == want);
    }
    SUBCASE("format version from the future") {
        BinaryImage img = load_binary(fixture_path("elf_ret.bin"));
        std::ofstream out(file, std::ios::trunc);
        out << "{\"format_version\": 999, \"hash\": \"" << to_hex(img.content_hash)
            << "\", \"strict\": false}";
        out.close();
        ApiHandle again = ApiHandle::open(fixture_path("elf_ret.bin"));
        CHECK(!again.loaded_from_cache());
        CHECK(again.payload().dump() == want);
    }
    SUBCASE("key mismatch") {
        std::ofstream out(file, std::ios::trunc);
        out << "{\"format_version\": " << kAnalysisFormatVersion
            << ", \"hash\": \"0000\", \"strict\": false}";
        out.close();
        ApiHandle again = ApiHandle::open(fixture_path("elf_ret.bin"));
        CHECK(!again.loaded_from_cache());
        CHECK(again.payload().dump() == want);
    }
}

TEST_CASE("function listing is address sorted with hex entry points") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    Page<FunctionInfo> page = api.list_functions();
    REQUIRE(page.total == 4);
    CHECK(page.returned == 4);
    CHECK(!page.next_offset.has_value());
    CHECK(page.items[0].name == "sub_401000");
    CHECK(page.items[0].address == "0x401000");
    CHECK(page.items[0].size_bytes == 0x10);
    CHECK(page.items[0].num_blocks == 1);
    CHECK(page.items[1].address == "0x401010");
    CHECK(page.items[3].name == "sub_40101f");
}

TEST_CASE("page windows tile the full listing") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    Page<FunctionInfo> whole = api.list_functions(0, 100);
    std::vector<FunctionInfo> stitched;
    int64_t offset = 0;
    int pages = 0;
    for (;;) {
        Page<FunctionInfo> p = api.list_functions(offset, 1);
        CHECK(p.total == whole.total);
        CHECK(p.offset == offset);
        CHECK(p.returned == static_cast<int64_t>(p.items.size()));
        stitched.insert(stitched.end(), p.items.begin(), p.items.end());
        ++pages;
        if (!p.next_offset) break;
        CHECK(*p.next_offset == offset + p.returned);
        offset = *p.next_offset;
    }
    CHECK(pages == 4);
    CHECK(stitched == whole.items);

    Page<FunctionInfo> past = api.list_functions(99, 5);
    CHECK(past.returned == 0);
    CHECK(past.items.empty());
    CHECK(!past.next_offset.has_value());

    Page<FunctionInfo> tail = api.list_functions(2, 100);
    CHECK(tail.returned == 2);
    CHECK(!tail.next_offset.has_value());
}

TEST_CASE("page bounds are validated") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    CHECK(error_code_of([&] { api.list_functions(-1, 10); }) == "InvalidPage");
    CHECK(error_code_of([&] { api.list_functions(0, 0); }) == "InvalidPage");
    CHECK(error_code_of([&] { api.get_imports(0, -5); }) == "InvalidPage");
    CHECK(error_code_of([&] { api.get_strings(-2, 1); }) == "InvalidPage");
}

TEST_CASE("imports are alphabetical and absent imports are empty answers") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    Page<std::string> imports = api.get_imports();
    CHECK(imports.items == std::vector<std::string>{"free", "memcpy", "strlen"});

    CHECK(api.find_callers_of_import("memcpy") == std::vector<std::string>{"sub_401012"});
    CHECK(api.find_callers_of_import("strlen") ==
          std::vector<std::string>{"exported_helper"});
    // bound by the loader but never called
    CHECK(api.find_callers_of_import("free").empty());
    CHECK(api.find_callers_of_import("vsnprintf").empty());

    ApiHandle none = ApiHandle::open(fixture_path("elf_ret.bin"));
    CHECK(none.get_imports().total == 0);
}

TEST_CASE("caller lookup agrees with a brute-force callee scan") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    for (const std::string& import : api.get_imports().items) {
        std::vector<std::string> brute;
        for (const FunctionInfo& f : api.list_functions().items) {
            auto callees = api.get_callees(f.name);
            if (std::find(callees.begin(), callees.end(), import) != callees.end()) {
                brute.push_back(f.name);
            }
        }
        CHECK(api.find_callers_of_import(import) == brute);
    }
}

TEST_CASE("string table is alphabetical with the short-run floor applied") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_strings.bin"));
    Page<std::string> strings = api.get_strings();
    // section-name strings count too: they are initialized-section bytes
    CHECK(strings.items ==
          std::vector<std::string>{"%s: %d", ".rodata", ".shstrtab", ".text",
                                   "hello world", "version 2.1.7"});
    for (const std::string& s : strings.items) CHECK(s.size() >= 4);
    CHECK(std::find(strings.items.begin(), strings.items.end(), "ab") ==
          strings.items.end());
}

TEST_CASE("string reference search folds case by default") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_strings.bin"));
    CHECK(api.find_functions_referencing_string("hello") ==
          std::vector<std::string>{"sub_401000"});
    CHECK(api.find_functions_referencing_string("VERSION") ==
          std::vector<std::string>{"sub_40100f"});
    CHECK(api.find_functions_referencing_string("VERSION", /*case_sensitive=*/true).empty());
    CHECK(api.find_functions_referencing_string("version", /*case_sensitive=*/true) ==
          std::vector<std::string>{"sub_40100f"});
    CHECK(api.find_functions_referencing_string("no such text").empty());
}

TEST_CASE("case-sensitive reference hits are a subset of folded hits") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_strings.bin"));
    std::vector<std::string> table = api.get_strings().items;
    REQUIRE(!table.empty());
    Rng rng(77);
    for (int i = 0; i < 50; ++i) {
        const std::string& s = table[rng.below(table.size())];
        size_t a = rng.below(s.size());
        size_t len = 1 + rng.below(s.size() - a);
        std::string needle = s.substr(a, len);
        if (rng.below(2)) { // flip one letter's case to stress the fold
            for (char& c : needle) {
                if (std::isalpha(static_cast<unsigned char>(c))) {
                    c = static_cast<char>(std::isupper(static_cast<unsigned char>(c))
                                              ? std::tolower(c)
                                              : std::toupper(c));
                    break;
                }
            }
        }
        auto strict_hits = api.find_functions_referencing_string(needle, true);
        auto folded = api.find_functions_referencing_string(needle, false);
        for (const auto& hit : strict_hits) {
            CHECK(std::find(folded.begin(), folded.end(), hit) != folded.end());
        }
    }
}

TEST_CASE("call graph queries honor the shared ordering contract") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    // imports alphabetically first, then internals by address
    CHECK(api.get_callees("sub_401012") ==
          std::vector<std::string>{"memcpy", "exported_helper"});
    CHECK(api.get_callees("exported_helper") == std::vector<std::string>{"strlen"});
    CHECK(api.get_callers("exported_helper") == std::vector<std::string>{"sub_401012"});
    CHECK(api.get_callers("sub_401012").empty());

    CHECK(error_code_of([&] { api.get_callees("sub_deadbeef"); }) == "UnknownName");
    // methods addressed at an import are name errors, not empty answers
    CHECK(error_code_of([&] { api.get_callees("memcpy"); }) == "UnknownName");
    CHECK(error_code_of([&] { api.get_callers("strlen"); }) == "UnknownName");
}

TEST_CASE("renders are stable, format-true, and guarded by name checks") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    std::string pcode = api.get_pcode("sub_401012");
    CHECK(pcode.rfind("blk_0:", 0) == 0);
    CHECK(pcode == api.get_pcode("sub_401012"));

    std::string c = api.decompile("exported_helper");
    CHECK(c.find("exported_helper(") != std::string::npos);
    CHECK(c.find("strlen(") != std::string::npos);

    CHECK(error_code_of([&] { api.decompile("malloc"); }) == "UnknownName");
    CHECK(error_code_of([&] { api.get_pcode("memcpy"); }) == "UnknownName");
    CHECK(error_code_of([&] { api.get_assembly("nope"); }) == "UnknownName");
}

TEST_CASE("assembly listing length equals the instruction count") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    // main: push, mov, call, call, pop, ret
    std::string listing = api.get_assembly("sub_401000");
    CHECK(std::count(listing.begin(), listing.end(), '\n') == 6);
}

TEST_CASE("cfg answers match the lifted block labels") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_diamond.bin"));
    Cfg cfg = api.get_cfg("sub_401000");
    CHECK(cfg.function == "sub_401000");
    CHECK(cfg.blocks == std::vector<std::string>{"blk_0", "blk_1", "blk_2", "blk_3"});
    CHECK(cfg.entry_block == "blk_0");
    REQUIRE(cfg.edges.size() == 4);
    auto has_edge = [&](const char* s, const char* t, const char* kind) {
        return std::count(cfg.edges.begin(), cfg.edges.end(), CfgEdge{s, t, kind}) == 1;
    };
    CHECK(has_edge("blk_0", "blk_1", "branch_false"));
    CHECK(has_edge("blk_0", "blk_2", "branch_true"));
    CHECK(has_edge("blk_1", "blk_3", "fallthrough"));
    CHECK(has_edge("blk_2", "blk_3", "unconditional"));

    // labels in the graph and headers in the text are the same namespace
    std::string pcode = api.get_pcode("sub_401000");
    std::vector<std::string> headers;
    std::istringstream in(pcode);
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == ':' && line.rfind("blk_", 0) == 0) {
            headers.push_back(line.substr(0, line.size() - 1));
        }
    }
    CHECK(headers == cfg.blocks);

    ApiHandle leaf = ApiHandle::open(fixture_path("elf_ret.bin"));
    CHECK(leaf.get_cfg("sub_401000").edges.empty());
    CHECK(error_code_of([&] { api.get_cfg("sub_f00"); }) == "UnknownName");
}

TEST_CASE("search groups matches by function in address order") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_memcpy.bin"));
    SearchResults hits = api.search_pcode("CALL memcpy");
    REQUIRE(hits.results.size() == 1);
    CHECK(hits.results[0].function == "sub_401006");
    CHECK(hits.results[0].match_count == 1);
    CHECK(hits.results[0].matches[0].match_text == "CALL memcpy");
    CHECK(hits.results[0].matches[0].line_number > 1);
    CHECK(hits.results[0].matches[0].line_content.find("CALL memcpy") != std::string::npos);
    CHECK(hits.total_match_count == 1);
    CHECK(!hits.truncated);
    CHECK(hits.limit == 200);

    SearchResults none = api.search_decompiled("no_such_token_anywhere");
    CHECK(none.results.empty());
    CHECK(none.total_match_count == 0);
    CHECK(!none.truncated);
}

TEST_CASE("search truncation stops at the cap and reports the cut") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    // every function returns, so RETURN appears once per function
    SearchResults all = api.search_pcode("RETURN", 200);
    REQUIRE(all.total_match_count == 4);
    CHECK(!all.truncated);

    SearchResults one = api.search_pcode("RETURN", 1);
    CHECK(one.total_match_count == 1);
    CHECK(one.truncated);
    REQUIRE(one.results.size() == 1);
    CHECK(one.results[0].function == "sub_401000");

    SearchResults exact = api.search_pcode("RETURN", 4);
    CHECK(exact.total_match_count == 4);
    CHECK(!exact.truncated); // the cap landed on the final match; nothing was cut
}

TEST_CASE("untruncated search totals equal a brute-force line scan") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    const char* patterns[] = {"CALL", "v[0-9]+:8", "RETURN|BRANCH", "RSP"};
    for (const char* pattern : patterns) {
        SearchResults found = api.search_pcode(pattern, 10000);
        REQUIRE(!found.truncated);
        std::regex re(pattern);
        int brute = 0;
        for (const FunctionInfo& f : api.list_functions().items) {
            std::istringstream text(api.get_pcode(f.name));
            std::string line;
            while (std::getline(text, line)) {
                brute += static_cast<int>(std::distance(
                    std::sregex_iterator(line.begin(), line.end(), re),
                    std::sregex_iterator()));
            }
        }
        CHECK(found.total_match_count == brute);
    }
}

TEST_CASE("assembly search sees the fixed-format listing") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_calls.bin"));
    SearchResults hits = api.search_assembly("PUSH RBP");
    CHECK(hits.total_match_count == 2); // main and the unused leaf
    SearchResults addr = api.search_assembly("^0x401010");
    CHECK(addr.total_match_count == 1);
}

TEST_CASE("pattern dialect is enforced before scanning") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_ret.bin"));
    CHECK(error_code_of([&] { api.search_pcode("(unclosed"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_pcode("(?=look)"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_pcode("(?!neg)"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_pcode("(?<name>x)"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_pcode("(a)\\1"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_decompiled("[z-a]"); }) == "InvalidPattern");
    CHECK(error_code_of([&] { api.search_assembly("RET", 0); }) == "InvalidPage");
    // the supported core still works
    CHECK(api.search_pcode("(?:RETURN)").total_match_count == 1);
    CHECK(api.search_pcode("^blk_[0-9]+:$").total_match_count == 1);
    CHECK(api.search_assembly("MOV|RET").total_match_count == 2);
}

TEST_CASE("strict mode hides surviving symbol names under its own cache key") {
    fs::remove(cache_file_for("elf_symtab.bin"));
    fs::remove(cache_file_for("elf_symtab.bin", true));

    ApiHandle named = ApiHandle::open(fixture_path("elf_symtab.bin"));
    std::vector<std::string> names;
    for (const auto& f : named.list_functions().items) names.push_back(f.name);
    CHECK(names == std::vector<std::string>{"main", "add_pair", "mul_pair", "unused_leaf"});

    ApiHandle strict = ApiHandle::open(fixture_path("elf_symtab.bin"), /*strict=*/true);
    CHECK(!strict.loaded_from_cache());
    std::vector<std::string> synthetic;
    for (const auto& f : strict.list_functions().items) synthetic.push_back(f.name);
    CHECK(synthetic == std::vector<std::string>{"sub_401000", "sub_401010", "sub_401017",
                                                "sub_40101f"});

    ApiHandle strict_again = ApiHandle::open(fixture_path("elf_symtab.bin"), true);
    CHECK(strict_again.loaded_from_cache());
    CHECK(strict_again.payload().dump() == strict.payload().dump());
    CHECK(fs::exists(cache_file_for("elf_symtab.bin")));
    CHECK(fs::exists(cache_file_for("elf_symtab.bin", true)));
}

TEST_CASE("every method is pure across repeated calls") {
    ApiHandle api = ApiHandle::open(fixture_path("elf_imports.bin"));
    CHECK(api.list_functions().items == api.list_functions().items);
    CHECK(api.get_imports().items == api.get_imports().items);
    CHECK(api.get_strings().items == api.get_strings().items);
    CHECK(api.get_callees("sub_401012") == api.get_callees("sub_401012"));
    CHECK(api.get_pcode("sub_401012") == api.get_pcode("sub_401012"));
    SearchResults a = api.search_pcode("CALL");
    SearchResults b = api.search_pcode("CALL");
    CHECK(a.total_match_count == b.total_match_count);
    CHECK(a.results.size() == b.results.size());
}
