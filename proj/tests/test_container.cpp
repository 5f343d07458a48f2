#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "binoracle/container.hpp"
#include "binoracle/error.hpp"
#include "binoracle/sha256.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace binoracle;

namespace {

std::string fixture_path(const std::string& name) {
    const char* dir = std::getenv("BINORACLE_FIXTURES");
    REQUIRE(dir != nullptr);
    return std::string(dir) + "/" + name;
}

std::map<std::string, std::string> load_manifest() {
    std::ifstream in(fixture_path("MANIFEST"));
    REQUIRE(in.good());
    std::map<std::string, std::string> out;
    std::string hash, name;
    while (in >> hash >> name) out[name] = hash;
    return out;
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

const Section* section_named(const BinaryImage& img, const std::string& name) {
    for (const auto& s : img.sections) {
        if (s.name == name) return &s;
    }
    return nullptr;
}

} // namespace

TEST_CASE("every fixture matches its externally computed hash") {
    auto manifest = load_manifest();
    REQUIRE(manifest.size() == 15);
    for (const auto& [name, hash] : manifest) {
        BinaryImage img = load_binary(fixture_path(name));
        CHECK(to_hex(img.content_hash) == hash);
        // and the standalone hasher agrees on raw bytes
        CHECK(to_hex(sha256(read_file(fixture_path(name)))) == hash);
    }
}

TEST_CASE("minimal ELF loads with one executable section") {
    BinaryImage img = load_binary(fixture_path("elf_ret.bin"));
    CHECK(img.format == BinaryFormat::ELF);
    CHECK(img.entry_va == 0x401000);
    CHECK(img.image_base == 0x401000);
    const Section* text = section_named(img, ".text");
    REQUIRE(text != nullptr);
    CHECK(text->executable);
    CHECK(text->allocated);
    CHECK(!text->writable);
    CHECK(text->va == 0x401000);
    CHECK(text->bytes.size() == 6);
    CHECK(img.imports.empty());
    CHECK(entry_points(img) == std::vector<uint64_t>{0x401000});
}

TEST_CASE("loading is deterministic field by field") {
    auto a = load_binary(fixture_path("elf_symtab.bin"));
    auto b = load_binary(fixture_path("elf_symtab.bin"));
    CHECK(a.content_hash == b.content_hash);
    CHECK(a.entry_va == b.entry_va);
    REQUIRE(a.sections.size() == b.sections.size());
    for (size_t i = 0; i < a.sections.size(); ++i) {
        CHECK(a.sections[i].name == b.sections[i].name);
        CHECK(a.sections[i].va == b.sections[i].va);
        CHECK(a.sections[i].bytes == b.sections[i].bytes);
    }
    REQUIRE(a.symbols.size() == b.symbols.size());
    for (size_t i = 0; i < a.symbols.size(); ++i) {
        CHECK(a.symbols[i].name == b.symbols[i].name);
        CHECK(a.symbols[i].va == b.symbols[i].va);
    }
}

TEST_CASE("garbage and truncated files are rejected with context") {
    CHECK_THROWS_WITH_AS(load_binary(fixture_path("no_such_file.bin")),
                         doctest::Contains("no_such_file"), Error);

    std::vector<uint8_t> garbage = {'G', 'A', 'R', 'B'};
    CHECK_THROWS_AS(load_binary_bytes(garbage), Error);

    std::vector<uint8_t> truncated_pe = {'M', 'Z', 0, 0};
    try {
        load_binary_bytes(truncated_pe);
        FAIL("expected MalformedContainer");
    } catch (const Error& e) {
        CHECK(e.code() == "MalformedContainer");
        CHECK(std::string(e.what()).find("offset") != std::string::npos);
    }

    auto good = read_file(fixture_path("elf_calls.bin"));
    good.resize(good.size() / 2); // cut the section header table off
    CHECK_THROWS_AS(load_binary_bytes(good), Error);
}

TEST_CASE("symbol table fixture exposes its functions") {
    BinaryImage img = load_binary(fixture_path("elf_symtab.bin"));
    std::set<std::string> names;
    for (const auto& s : img.symbols) {
        if (s.is_function && s.defined) names.insert(s.name);
    }
    CHECK(names == std::set<std::string>{"main", "add_pair", "mul_pair", "unused_leaf"});
    auto eps = entry_points(img);
    CHECK(eps.size() == 4); // entry coincides with main
    CHECK(std::count(eps.begin(), eps.end(), 0x401000) == 1);
    CHECK(std::count(eps.begin(), eps.end(), 0x40101F) == 1);
}

TEST_CASE("ELF dynamic imports are discovered and deduplicated") {
    BinaryImage img = load_binary(fixture_path("elf_imports.bin"));
    auto imports = extract_imports(img);
    REQUIRE(imports.size() == 3);
    CHECK(imports[0].name == "free");
    CHECK(imports[1].name == "memcpy");
    CHECK(imports[2].name == "strlen");
    // jump-slot map points each GOT slot at its import
    REQUIRE(img.import_slots.size() == 3);
    CHECK(img.import_slots.at(0x404000) == "memcpy");
    CHECK(img.import_slots.at(0x404008) == "strlen");
    CHECK(img.import_slots.at(0x404010) == "free");
    // the defined dynsym function is an export and an entry point
    REQUIRE(img.export_vas.size() == 1);
    auto eps = entry_points(img);
    CHECK(std::count(eps.begin(), eps.end(), img.export_vas[0]) == 1);
}

TEST_CASE("PE imports cover names and ordinals across two DLLs") {
    BinaryImage img = load_binary(fixture_path("pe_imports.bin"));
    CHECK(img.format == BinaryFormat::PE);
    CHECK(img.image_base == 0x140000000ULL);
    CHECK(img.entry_va == 0x140001000ULL);
    auto imports = extract_imports(img);
    REQUIRE(imports.size() == 4);
    // sorted by (library, name)
    CHECK(imports[0].library == "KERNEL32.dll");
    CHECK(imports[0].name == "ExitProcess");
    CHECK(imports[1].name == "GetTickCount");
    CHECK(imports[2].library == "msvcrt.dll");
    CHECK(imports[2].name == "memcpy");
    CHECK(imports[3].name == "ord#42");
    for (const auto& imp : imports) {
        REQUIRE(imp.thunk_va.has_value());
        CHECK(img.import_slots.at(*imp.thunk_va) == imp.name);
    }
}

TEST_CASE("PE exports become entry points and named symbols") {
    BinaryImage img = load_binary(fixture_path("pe_exports.bin"));
    CHECK(img.export_vas.size() == 3); // two named + one ordinal-only
    std::set<std::string> names;
    for (const auto& s : img.symbols) names.insert(s.name);
    CHECK(names == std::set<std::string>{"initialize", "compute"});
    auto eps = entry_points(img);
    CHECK(eps.size() == 4); // entry + 3 exports
}

TEST_CASE("string extraction keeps NUL-terminated printable runs of 4+") {
    BinaryImage img = load_binary(fixture_path("elf_strings.bin"));
    auto strings = extract_strings(img);
    auto has = [&](const std::string& t) {
        return std::any_of(strings.begin(), strings.end(),
                           [&](const StringLiteral& s) { return s.text == t; });
    };
    CHECK(has("hello world"));
    CHECK(has("%s: %d"));
    CHECK(has("version 2.1.7"));
    CHECK(!has("ab")); // below the length floor
    CHECK(std::is_sorted(strings.begin(), strings.end(),
                         [](const StringLiteral& a, const StringLiteral& b) {
                             return std::tie(a.text, a.va) < std::tie(b.text, b.va);
                         }));
    for (const auto& s : strings) {
        CHECK(s.text.size() >= 4);
        CHECK(std::all_of(s.text.begin(), s.text.end(),
                          [](unsigned char c) { return c >= 0x20 && c <= 0x7E; }));
    }
    // the VA of a literal points at its bytes
    auto hello = std::find_if(strings.begin(), strings.end(),
                              [](const StringLiteral& s) { return s.text == "hello world"; });
    REQUIRE(hello != strings.end());
    CHECK(hello->va == 0x402000);
    auto bytes = img.bytes_at(hello->va, hello->byte_len);
    CHECK(std::string(bytes.begin(), bytes.end()) == "hello world");
}

TEST_CASE("string scan is complete over synthetic section content") {
    BinaryImage img = load_binary(fixture_path("pe_strings.bin"));
    auto strings = extract_strings(img);
    auto texts = [&] {
        std::multiset<std::string> t;
        for (const auto& s : strings) t.insert(s.text);
        return t;
    }();
    // brute-force reference scan over each initialized section
    std::multiset<std::string> expected;
    for (const auto& s : img.sections) {
        if (!s.initialized) continue;
        std::string run;
        for (size_t i = 0; i <= s.bytes.size(); ++i) {
            uint8_t b = i < s.bytes.size() ? s.bytes[i] : 0;
            if (i < s.bytes.size() && b >= 0x20 && b <= 0x7E) {
                run.push_back(static_cast<char>(b));
            } else {
                if ((i == s.bytes.size() || b == 0) && run.size() >= 4) expected.insert(run);
                run.clear();
            }
        }
    }
    CHECK(texts == expected);
    CHECK(texts.count("config loaded") == 1);
    CHECK(texts.count("error: %d") == 1);
}

TEST_CASE("bytes_at respects section bounds") {
    BinaryImage img = load_binary(fixture_path("elf_ret.bin"));
    auto code = img.bytes_at(0x401000, 6);
    REQUIRE(code.size() == 6);
    CHECK(code[0] == 0xB8);
    CHECK(code[5] == 0xC3);
    CHECK(img.bytes_at(0x401004, 100).size() == 2); // clipped at section end
    CHECK(img.bytes_at(0xdead0000, 4).empty());     // unmapped
}
