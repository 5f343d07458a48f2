#include "binoracle/container.hpp"

#include "binoracle/error.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <set>

namespace binoracle {
namespace {

// Bounds-checked little-endian reader; failures carry the offending offset.
class Reader {
public:
    explicit Reader(const std::vector<uint8_t>& data) : data_(data) {}

    uint8_t u8(size_t off) const {
        check(off, 1);
        return data_[off];
    }
    uint16_t u16(size_t off) const {
        check(off, 2);
        return static_cast<uint16_t>(data_[off] | data_[off + 1] << 8);
    }
    uint32_t u32(size_t off) const {
        check(off, 4);
        uint32_t v = 0;
        for (int i = 3; i >= 0; --i) v = (v << 8) | data_[off + i];
        return v;
    }
    uint64_t u64(size_t off) const {
        check(off, 8);
        uint64_t v = 0;
        for (int i = 7; i >= 0; --i) v = (v << 8) | data_[off + i];
        return v;
    }
    std::vector<uint8_t> slice(size_t off, size_t len) const {
        check(off, len);
        return {data_.begin() + off, data_.begin() + off + len};
    }
    // NUL-terminated string starting at off.
    std::string cstr(size_t off) const {
        check(off, 1);
        size_t end = off;
        while (end < data_.size() && data_[end] != 0) ++end;
        return std::string(data_.begin() + off, data_.begin() + end);
    }
    size_t size() const { return data_.size(); }

private:
    void check(size_t off, size_t len) const {
        if (off > data_.size() || len > data_.size() - off) {
            fail("MalformedContainer",
                 "read of " + std::to_string(len) + " bytes at offset " +
                     std::to_string(off) + " exceeds file size " +
                     std::to_string(data_.size()));
        }
    }
    const std::vector<uint8_t>& data_;
};

constexpr uint32_t SHT_NOBITS = 8;
constexpr uint32_t SHT_SYMTAB = 2;
constexpr uint32_t SHT_DYNSYM = 11;
constexpr uint32_t SHT_RELA = 4;
constexpr uint64_t SHF_WRITE = 1;
constexpr uint64_t SHF_ALLOC = 2;
constexpr uint64_t SHF_EXECINSTR = 4;
constexpr uint16_t SHN_UNDEF = 0;
constexpr uint16_t SHN_ABS = 0xFFF1;
constexpr uint32_t R_X86_64_JUMP_SLOT = 7;

struct ElfSymbol {
    std::string name;
    uint64_t value = 0;
    uint8_t info = 0;
    uint16_t shndx = 0;
};

std::vector<ElfSymbol> parse_elf_symbols(const Reader& r, size_t off, size_t size,
                                         size_t str_off) {
    std::vector<ElfSymbol> out;
    for (size_t pos = off; pos + 24 <= off + size; pos += 24) {
        ElfSymbol s;
        uint32_t name_off = r.u32(pos);
        s.info = r.u8(pos + 4);
        s.shndx = r.u16(pos + 6);
        s.value = r.u64(pos + 8);
        s.name = name_off ? r.cstr(str_off + name_off) : "";
        out.push_back(std::move(s));
    }
    return out;
}

BinaryImage parse_elf(const std::vector<uint8_t>& data) {
    Reader r(data);
    if (r.u8(4) != 2) fail("MalformedContainer", "not a 64-bit ELF (EI_CLASS at offset 4)");
    if (r.u8(5) != 1) fail("MalformedContainer", "not little-endian ELF (EI_DATA at offset 5)");

    BinaryImage img;
    img.format = BinaryFormat::ELF;
    img.entry_va = r.u64(0x18);
    uint64_t shoff = r.u64(0x28);
    uint16_t shentsize = r.u16(0x3A);
    uint16_t shnum = r.u16(0x3C);
    uint16_t shstrndx = r.u16(0x3E);
    if (shnum == 0) fail("MalformedContainer", "ELF without section headers is unsupported");
    if (shentsize < 64) {
        fail("MalformedContainer", "section header entry size " + std::to_string(shentsize));
    }

    auto sh_field = [&](uint16_t idx, size_t field_off) {
        return r.u64(shoff + static_cast<size_t>(idx) * shentsize + field_off);
    };
    uint64_t shstr_off = sh_field(shstrndx, 0x18);

    struct RawSection {
        uint32_t type;
        uint64_t flags, va, off, size, link;
    };
    std::vector<RawSection> raw(shnum);
    img.image_base = UINT64_MAX;
    for (uint16_t i = 0; i < shnum; ++i) {
        size_t base = shoff + static_cast<size_t>(i) * shentsize;
        Section s;
        s.name = r.cstr(shstr_off + r.u32(base));
        raw[i].type = r.u32(base + 4);
        raw[i].flags = r.u64(base + 8);
        raw[i].va = r.u64(base + 0x10);
        raw[i].off = r.u64(base + 0x18);
        raw[i].size = r.u64(base + 0x20);
        raw[i].link = r.u32(base + 0x28);
        s.va = raw[i].va;
        s.size = raw[i].size;
        s.executable = raw[i].flags & SHF_EXECINSTR;
        s.writable = raw[i].flags & SHF_WRITE;
        s.allocated = raw[i].flags & SHF_ALLOC;
        s.initialized = raw[i].type != SHT_NOBITS && raw[i].type != 0;
        if (s.initialized && raw[i].size > 0) {
            s.bytes = r.slice(raw[i].off, raw[i].size);
        }
        if (s.allocated && s.va != 0) img.image_base = std::min(img.image_base, s.va);
        img.sections.push_back(std::move(s));
    }
    if (img.image_base == UINT64_MAX) img.image_base = 0;

    // Symbols from .symtab and .dynsym. Dynsym start index remembered so
    // jump-slot relocations can be resolved by symbol index below.
    std::vector<ElfSymbol> dynsyms;
    for (uint16_t i = 0; i < shnum; ++i) {
        if (raw[i].type != SHT_SYMTAB && raw[i].type != SHT_DYNSYM) continue;
        uint16_t strndx = static_cast<uint16_t>(raw[i].link);
        if (strndx >= shnum) fail("MalformedContainer", "symbol table links to bad strtab");
        auto syms = parse_elf_symbols(r, raw[i].off, raw[i].size, raw[strndx].off);
        if (raw[i].type == SHT_DYNSYM) dynsyms = syms;
        for (const auto& es : syms) {
            if (es.name.empty()) continue;
            SymbolEntry sym;
            sym.name = es.name;
            sym.va = es.value;
            sym.is_function = (es.info & 0xF) == 2; // STT_FUNC
            sym.absolute = es.shndx == SHN_ABS;
            sym.defined = es.shndx != SHN_UNDEF;
            if (raw[i].type == SHT_DYNSYM && sym.defined && sym.is_function &&
                (es.info >> 4) != 0 /* not STB_LOCAL */) {
                img.export_vas.push_back(sym.va);
            }
            img.symbols.push_back(std::move(sym));
        }
    }

    // Imports: undefined dynamic FUNC symbols, or untyped undefined symbols
    // referenced by a jump-slot relocation.
    std::set<std::string> jump_slot_names;
    for (uint16_t i = 0; i < shnum; ++i) {
        if (raw[i].type != SHT_RELA) continue;
        for (uint64_t pos = 0; pos + 24 <= raw[i].size; pos += 24) {
            uint64_t offset = r.u64(raw[i].off + pos);
            uint64_t info = r.u64(raw[i].off + pos + 8);
            if ((info & 0xFFFFFFFF) != R_X86_64_JUMP_SLOT) continue;
            uint32_t symidx = static_cast<uint32_t>(info >> 32);
            if (symidx < dynsyms.size() && !dynsyms[symidx].name.empty()) {
                img.import_slots[offset] = dynsyms[symidx].name;
                jump_slot_names.insert(dynsyms[symidx].name);
            }
        }
    }
    std::set<ImportEntry> dedup;
    for (const auto& es : dynsyms) {
        if (es.shndx != SHN_UNDEF || es.name.empty()) continue;
        bool is_func = (es.info & 0xF) == 2;
        if (!is_func && !jump_slot_names.count(es.name)) continue;
        dedup.insert(ImportEntry{es.name, "", std::nullopt});
    }
    img.imports.assign(dedup.begin(), dedup.end());
    return img;
}

constexpr uint32_t PE_SCN_CNT_CODE = 0x00000020;
constexpr uint32_t PE_SCN_CNT_INITIALIZED = 0x00000040;
constexpr uint32_t PE_SCN_MEM_EXECUTE = 0x20000000;
constexpr uint32_t PE_SCN_MEM_WRITE = 0x80000000;

BinaryImage parse_pe(const std::vector<uint8_t>& data) {
    Reader r(data);
    uint32_t pe_off = r.u32(0x3C);
    if (r.u32(pe_off) != 0x00004550) { // "PE\0\0"
        fail("MalformedContainer",
             "PE signature missing at offset " + std::to_string(pe_off));
    }
    uint16_t machine = r.u16(pe_off + 4);
    if (machine != 0x8664) {
        fail("MalformedContainer", "unsupported PE machine " + std::to_string(machine) +
                                       " at offset " + std::to_string(pe_off + 4));
    }
    uint16_t nsections = r.u16(pe_off + 6);
    uint16_t opt_size = r.u16(pe_off + 20);
    size_t opt_off = pe_off + 24;
    if (r.u16(opt_off) != 0x20B) fail("MalformedContainer", "not a PE32+ optional header");

    BinaryImage img;
    img.format = BinaryFormat::PE;
    uint32_t entry_rva = r.u32(opt_off + 16);
    img.image_base = r.u64(opt_off + 24);
    img.entry_va = img.image_base + entry_rva;
    uint32_t ndirs = r.u32(opt_off + 108);
    auto directory = [&](uint32_t index) -> std::pair<uint32_t, uint32_t> {
        if (index >= ndirs) return {0, 0};
        size_t off = opt_off + 112 + 8 * index;
        return {r.u32(off), r.u32(off + 4)};
    };

    size_t sec_off = opt_off + opt_size;
    for (uint16_t i = 0; i < nsections; ++i) {
        size_t base = sec_off + 40 * static_cast<size_t>(i);
        Section s;
        auto name_bytes = r.slice(base, 8);
        s.name.assign(name_bytes.begin(),
                      std::find(name_bytes.begin(), name_bytes.end(), uint8_t(0)));
        uint32_t vsize = r.u32(base + 8);
        uint32_t rva = r.u32(base + 12);
        uint32_t raw_size = r.u32(base + 16);
        uint32_t raw_off = r.u32(base + 20);
        uint32_t chars = r.u32(base + 36);
        s.va = img.image_base + rva;
        s.executable = chars & PE_SCN_MEM_EXECUTE;
        s.writable = chars & PE_SCN_MEM_WRITE;
        s.initialized = chars & (PE_SCN_CNT_CODE | PE_SCN_CNT_INITIALIZED);
        s.allocated = true;
        if (s.initialized) {
            uint32_t n = std::min(raw_size, vsize ? vsize : raw_size);
            s.bytes = r.slice(raw_off, n);
            s.bytes.resize(std::max(n, vsize), 0); // pad to the in-memory size
            s.size = s.bytes.size();
        } else {
            s.size = vsize;
        }
        img.sections.push_back(std::move(s));
    }

    // Maps an RVA through the section table into a file offset.
    auto rva_to_off = [&](uint32_t rva) -> size_t {
        for (uint16_t i = 0; i < nsections; ++i) {
            size_t base = sec_off + 40 * static_cast<size_t>(i);
            uint32_t srva = r.u32(base + 12);
            uint32_t rsize = r.u32(base + 16);
            uint32_t roff = r.u32(base + 20);
            uint32_t vsize = r.u32(base + 8);
            uint32_t extent = std::max(rsize, vsize);
            if (rva >= srva && rva < srva + extent) return roff + (rva - srva);
        }
        fail("MalformedContainer", "RVA 0x" + std::to_string(rva) + " maps to no section");
    };

    auto [imp_rva, imp_size] = directory(1);
    if (imp_rva != 0) {
        std::set<ImportEntry> dedup;
        for (size_t d = 0;; ++d) {
            size_t desc = rva_to_off(imp_rva) + 20 * d;
            uint32_t ilt_rva = r.u32(desc);
            uint32_t name_rva = r.u32(desc + 12);
            uint32_t iat_rva = r.u32(desc + 16);
            if (ilt_rva == 0 && name_rva == 0 && iat_rva == 0) break;
            std::string lib = r.cstr(rva_to_off(name_rva));
            uint32_t lookup = ilt_rva ? ilt_rva : iat_rva;
            for (size_t k = 0;; ++k) {
                uint64_t entry = r.u64(rva_to_off(lookup) + 8 * k);
                if (entry == 0) break;
                std::string name;
                if (entry & (1ULL << 63)) {
                    name = "ord#" + std::to_string(entry & 0xFFFF);
                } else {
                    name = r.cstr(rva_to_off(static_cast<uint32_t>(entry)) + 2);
                }
                uint64_t slot_va = img.image_base + iat_rva + 8 * k;
                dedup.insert(ImportEntry{name, lib, slot_va});
                img.import_slots[slot_va] = name;
            }
        }
        img.imports.assign(dedup.begin(), dedup.end());
    }

    auto [exp_rva, exp_size] = directory(0);
    if (exp_rva != 0) {
        size_t dir = rva_to_off(exp_rva);
        uint32_t nfuncs = r.u32(dir + 20);
        uint32_t nnames = r.u32(dir + 24);
        uint32_t funcs_rva = r.u32(dir + 28);
        uint32_t names_rva = r.u32(dir + 32);
        uint32_t ords_rva = r.u32(dir + 36);
        for (uint32_t i = 0; i < nfuncs; ++i) {
            uint32_t frva = r.u32(rva_to_off(funcs_rva) + 4 * i);
            if (frva) img.export_vas.push_back(img.image_base + frva);
        }
        for (uint32_t i = 0; i < nnames; ++i) {
            uint32_t name_rva = r.u32(rva_to_off(names_rva) + 4 * i);
            uint16_t ord = r.u16(rva_to_off(ords_rva) + 2 * i);
            if (ord < nfuncs) {
                uint32_t frva = r.u32(rva_to_off(funcs_rva) + 4 * ord);
                SymbolEntry sym;
                sym.name = r.cstr(rva_to_off(name_rva));
                sym.va = img.image_base + frva;
                sym.is_function = true;
                sym.defined = true;
                img.symbols.push_back(std::move(sym));
            }
        }
    }
    return img;
}

} // namespace

const Section* BinaryImage::section_containing(uint64_t va) const {
    for (const auto& s : sections) {
        if (s.size > 0 && s.allocated && s.contains(va)) return &s;
    }
    return nullptr;
}

std::vector<uint8_t> BinaryImage::bytes_at(uint64_t va, size_t len) const {
    const Section* s = section_containing(va);
    if (!s || !s->initialized) return {};
    size_t off = va - s->va;
    size_t n = std::min(len, s->bytes.size() > off ? s->bytes.size() - off : 0);
    return {s->bytes.begin() + off, s->bytes.begin() + off + n};
}

BinaryImage load_binary_bytes(const std::vector<uint8_t>& data) {
    if (data.size() >= 4 && data[0] == 0x7F && data[1] == 'E' && data[2] == 'L' &&
        data[3] == 'F') {
        BinaryImage img = parse_elf(data);
        img.content_hash = sha256(data);
        return img;
    }
    if (data.size() >= 2 && data[0] == 'M' && data[1] == 'Z') {
        BinaryImage img = parse_pe(data);
        img.content_hash = sha256(data);
        return img;
    }
    fail("NotABinary", "no ELF or PE magic at offset 0");
}

BinaryImage load_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("NotABinary", "cannot open " + path);
    std::vector<uint8_t> data((std::istreambuf_iterator<char>(in)),
                              std::istreambuf_iterator<char>());
    return load_binary_bytes(data);
}

std::vector<ImportEntry> extract_imports(const BinaryImage& img) {
    return img.imports;
}

std::vector<StringLiteral> extract_strings(const BinaryImage& img) {
    std::vector<StringLiteral> out;
    for (const auto& s : img.sections) {
        if (!s.initialized) continue;
        size_t run_start = 0;
        size_t run_len = 0;
        for (size_t i = 0; i <= s.bytes.size(); ++i) {
            uint8_t b = i < s.bytes.size() ? s.bytes[i] : 0;
            if (i < s.bytes.size() && b >= 0x20 && b <= 0x7E) {
                if (run_len == 0) run_start = i;
                ++run_len;
                continue;
            }
            bool terminated = i == s.bytes.size() || b == 0;
            if (terminated && run_len >= 4) {
                StringLiteral lit;
                lit.va = s.va + run_start;
                lit.text.assign(s.bytes.begin() + run_start,
                                s.bytes.begin() + run_start + run_len);
                lit.byte_len = run_len;
                out.push_back(std::move(lit));
            }
            run_len = 0;
        }
    }
    std::sort(out.begin(), out.end(), [](const StringLiteral& a, const StringLiteral& b) {
        return std::tie(a.text, a.va) < std::tie(b.text, b.va);
    });
    return out;
}

std::vector<uint64_t> entry_points(const BinaryImage& img) {
    std::set<uint64_t> vas;
    if (img.entry_va) vas.insert(img.entry_va);
    for (uint64_t va : img.export_vas) vas.insert(va);
    for (const auto& sym : img.symbols) {
        if (sym.defined && sym.is_function && !sym.absolute && sym.va) vas.insert(sym.va);
    }
    return {vas.begin(), vas.end()};
}

} // namespace binoracle
