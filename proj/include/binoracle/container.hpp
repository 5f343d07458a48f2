#pragma once

#include "binoracle/sha256.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace binoracle {

enum class BinaryFormat { ELF, PE };

struct Section {
    std::string name;
    uint64_t va = 0;
    uint64_t size = 0;
    bool executable = false;
    bool writable = false;
    bool initialized = false;
    bool allocated = false; // mapped into the process image
    std::vector<uint8_t> bytes; // empty when uninitialized

    bool contains(uint64_t addr) const { return addr >= va && addr < va + size; }
};

struct SymbolEntry {
    std::string name;
    uint64_t va = 0;
    bool is_function = false;
    bool absolute = false;
    bool defined = false;
};

struct ImportEntry {
    std::string name;
    std::string library; // empty when the container does not record one
    std::optional<uint64_t> thunk_va;

    bool operator<(const ImportEntry& o) const {
        return std::tie(library, name) < std::tie(o.library, o.name);
    }
};

struct StringLiteral {
    uint64_t va = 0;
    std::string text;
    uint64_t byte_len = 0;
};

// Immutable parsed container. Construction is single-threaded per file; the
// result is safe for unlimited concurrent readers.
struct BinaryImage {
    BinaryFormat format = BinaryFormat::ELF;
    Sha256Digest content_hash{};
    std::vector<Section> sections;
    std::vector<SymbolEntry> symbols;
    std::vector<ImportEntry> imports;
    uint64_t entry_va = 0;
    uint64_t image_base = 0;
    std::vector<uint64_t> export_vas;
    // Indirection slots (ELF: GOT entries bound by jump-slot relocations;
    // PE: IAT entries) keyed by slot VA. Calls and jumps resolving through
    // these slots are direct calls to the named import.
    std::map<uint64_t, std::string> import_slots;

    const Section* section_containing(uint64_t va) const;
    // Reads up to `len` contiguous bytes at `va` from one initialized section.
    std::vector<uint8_t> bytes_at(uint64_t va, size_t len) const;
};

// Parses an ELF or PE file. Errors: NotABinary (unrecognized magic),
// MalformedContainer (structurally broken; message carries byte offsets).
BinaryImage load_binary(const std::string& path);
BinaryImage load_binary_bytes(const std::vector<uint8_t>& bytes);

std::vector<ImportEntry> extract_imports(const BinaryImage& img);

// Maximal printable-ASCII runs (0x20..0x7E) of length >= 4, terminated by NUL
// or section end, inside allocated initialized sections. Sorted by text.
std::vector<StringLiteral> extract_strings(const BinaryImage& img);

// Container entry VA, export VAs, and defined function-symbol VAs when a
// symbol table survives. Deduplicated and sorted.
std::vector<uint64_t> entry_points(const BinaryImage& img);

} // namespace binoracle
