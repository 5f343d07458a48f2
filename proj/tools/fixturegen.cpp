// Writes the deterministic binary fixture corpus used by the test suite.
// Every byte is derived from constants below, so regeneration is
// reproducible and the committed files can be hash-checked.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

namespace {

void push16(std::vector<uint8_t>& v, uint16_t x) {
    v.push_back(x & 0xFF);
    v.push_back(x >> 8);
}
void push32(std::vector<uint8_t>& v, uint32_t x) {
    for (int i = 0; i < 4; ++i) v.push_back((x >> (8 * i)) & 0xFF);
}
void push64(std::vector<uint8_t>& v, uint64_t x) {
    for (int i = 0; i < 8; ++i) v.push_back((x >> (8 * i)) & 0xFF);
}
void put32(std::vector<uint8_t>& v, size_t off, uint32_t x) {
    for (int i = 0; i < 4; ++i) v[off + i] = (x >> (8 * i)) & 0xFF;
}
void pad_to(std::vector<uint8_t>& v, size_t size) { v.resize(size, 0); }
size_t align_up(size_t x, size_t a) { return (x + a - 1) / a * a; }

// Tiny emitter: append raw bytes, or rel8/rel32 displacement fields that are
// relative to the end of the field (x86 rule for both branches and RIP).
class Asm {
public:
    explicit Asm(uint64_t base) : base_(base) {}
    uint64_t here() const { return base_ + b_.size(); }
    Asm& db(std::initializer_list<int> bytes) {
        for (int x : bytes) b_.push_back(static_cast<uint8_t>(x));
        return *this;
    }
    Asm& ascii(const std::string& s, bool nul = true) {
        b_.insert(b_.end(), s.begin(), s.end());
        if (nul) b_.push_back(0);
        return *this;
    }
    Asm& rel32(uint64_t target) {
        int64_t rel = static_cast<int64_t>(target) - static_cast<int64_t>(here() + 4);
        push32(b_, static_cast<uint32_t>(rel));
        return *this;
    }
    Asm& rel8(uint64_t target) {
        int64_t rel = static_cast<int64_t>(target) - static_cast<int64_t>(here() + 1);
        b_.push_back(static_cast<uint8_t>(rel));
        return *this;
    }
    const std::vector<uint8_t>& bytes() const { return b_; }

private:
    uint64_t base_;
    std::vector<uint8_t> b_;
};

// ---------------------------------------------------------------- ELF side

struct ElfSec {
    std::string name;
    uint32_t type; // 1 progbits, 2 symtab, 3 strtab, 4 rela, 11 dynsym
    uint64_t flags;
    uint64_t va;
    std::vector<uint8_t> bytes;
    uint32_t link = 0;
    uint64_t entsize = 0;
};

class ElfBuilder {
public:
    uint64_t entry = 0;

    // returns the section header index (0 is the reserved null entry)
    int add(ElfSec s) {
        secs_.push_back(std::move(s));
        return static_cast<int>(secs_.size());
    }

    std::vector<uint8_t> build() const {
        std::vector<uint8_t> shstr = {0};
        std::vector<uint32_t> name_off;
        for (const auto& s : secs_) {
            name_off.push_back(static_cast<uint32_t>(shstr.size()));
            shstr.insert(shstr.end(), s.name.begin(), s.name.end());
            shstr.push_back(0);
        }
        uint32_t shstr_name = static_cast<uint32_t>(shstr.size());
        const std::string tag = ".shstrtab";
        shstr.insert(shstr.end(), tag.begin(), tag.end());
        shstr.push_back(0);

        std::vector<uint8_t> out(0x40, 0);
        std::vector<uint64_t> data_off;
        for (const auto& s : secs_) {
            pad_to(out, align_up(out.size(), 16));
            data_off.push_back(out.size());
            out.insert(out.end(), s.bytes.begin(), s.bytes.end());
        }
        pad_to(out, align_up(out.size(), 16));
        uint64_t shstr_off = out.size();
        out.insert(out.end(), shstr.begin(), shstr.end());
        pad_to(out, align_up(out.size(), 8));
        uint64_t shoff = out.size();

        uint16_t shnum = static_cast<uint16_t>(secs_.size() + 2);
        uint16_t shstrndx = static_cast<uint16_t>(secs_.size() + 1);

        auto shdr = [&](uint32_t name, uint32_t type, uint64_t flags, uint64_t va,
                        uint64_t off, uint64_t size, uint32_t link, uint64_t entsize) {
            push32(out, name);
            push32(out, type);
            push64(out, flags);
            push64(out, va);
            push64(out, off);
            push64(out, size);
            push32(out, link);
            push32(out, 0); // info
            push64(out, 1); // addralign
            push64(out, entsize);
        };
        shdr(0, 0, 0, 0, 0, 0, 0, 0);
        for (size_t i = 0; i < secs_.size(); ++i) {
            shdr(name_off[i], secs_[i].type, secs_[i].flags, secs_[i].va, data_off[i],
                 secs_[i].bytes.size(), secs_[i].link, secs_[i].entsize);
        }
        shdr(shstr_name, 3, 0, 0, shstr_off, shstr.size(), 0, 0);

        // ELF header
        const uint8_t ident[16] = {0x7F, 'E', 'L', 'F', 2, 1, 1, 0, 0, 0, 0, 0, 0, 0, 0, 0};
        std::copy(ident, ident + 16, out.begin());
        std::vector<uint8_t> hdr;
        push16(hdr, 2);      // ET_EXEC
        push16(hdr, 0x3E);   // EM_X86_64
        push32(hdr, 1);      // version
        push64(hdr, entry);
        push64(hdr, 0);      // phoff
        push64(hdr, shoff);
        push32(hdr, 0);      // flags
        push16(hdr, 64);     // ehsize
        push16(hdr, 0);      // phentsize
        push16(hdr, 0);      // phnum
        push16(hdr, 64);     // shentsize
        push16(hdr, shnum);
        push16(hdr, shstrndx);
        std::copy(hdr.begin(), hdr.end(), out.begin() + 16);
        return out;
    }

private:
    std::vector<ElfSec> secs_;
};

struct SymSpec {
    std::string name;
    uint64_t value;
    bool defined;
};

// 24-byte ELF64 symbols with a leading null entry; all global FUNC.
std::pair<std::vector<uint8_t>, std::vector<uint8_t>> build_elf_symbols(
    const std::vector<SymSpec>& syms, uint16_t text_shndx) {
    std::vector<uint8_t> strtab = {0};
    std::vector<uint8_t> tab(24, 0);
    for (const auto& s : syms) {
        uint32_t noff = static_cast<uint32_t>(strtab.size());
        strtab.insert(strtab.end(), s.name.begin(), s.name.end());
        strtab.push_back(0);
        push32(tab, noff);
        tab.push_back(0x12); // GLOBAL FUNC
        tab.push_back(0);
        push16(tab, s.defined ? text_shndx : 0);
        push64(tab, s.value);
        push64(tab, 0);
    }
    return {tab, strtab};
}

std::vector<uint8_t> build_jump_slot_relas(
    const std::vector<std::pair<uint64_t, uint32_t>>& slot_symidx) {
    std::vector<uint8_t> out;
    for (auto [slot, symidx] : slot_symidx) {
        push64(out, slot);
        push64(out, (static_cast<uint64_t>(symidx) << 32) | 7); // R_X86_64_JUMP_SLOT
        push64(out, 0);
    }
    return out;
}

constexpr uint64_t SHF_WRITE = 1, SHF_ALLOC = 2, SHF_EXEC = 4;
constexpr uint64_t TEXT_VA = 0x401000, RODATA_VA = 0x402000, GOT_VA = 0x404000;

// .text + optional .rodata, no symbols: the common stripped shape.
std::vector<uint8_t> stripped_elf(uint64_t entry, std::vector<uint8_t> text,
                                  std::vector<uint8_t> rodata = {}) {
    ElfBuilder e;
    e.entry = entry;
    e.add({".text", 1, SHF_ALLOC | SHF_EXEC, TEXT_VA, std::move(text)});
    if (!rodata.empty()) e.add({".rodata", 1, SHF_ALLOC, RODATA_VA, std::move(rodata)});
    return e.build();
}

std::vector<uint8_t> diamond_text() {
    Asm a(TEXT_VA);
    a.db({0x48, 0x83, 0xF9, 0x00});              // cmp rcx, 0
    a.db({0x74}).rel8(TEXT_VA + 0x0E);           // jz -> taken arm
    a.db({0x48, 0x8D, 0x05}).rel32(RODATA_VA);   // lea rax, [rip -> .rodata]
    a.db({0xC3});                                // ret (join)
    a.db({0x48, 0x8B, 0x41, 0x18});              // mov rax, [rcx+0x18]
    a.db({0xEB}).rel8(TEXT_VA + 0x0D);           // jmp back to the ret
    return a.bytes();
}

std::vector<uint8_t> calls_text() {
    const uint64_t main_va = TEXT_VA, add_va = TEXT_VA + 0x10, mul_va = TEXT_VA + 0x17,
                   leaf_va = TEXT_VA + 0x1F;
    Asm a(TEXT_VA);
    a.db({0x55, 0x48, 0x89, 0xE5});      // push rbp; mov rbp,rsp
    a.db({0xE8}).rel32(add_va);          // call add_pair
    a.db({0xE8}).rel32(mul_va);          // call mul_pair
    a.db({0x5D, 0xC3});                  // pop rbp; ret
    // add_pair
    a.db({0x48, 0x89, 0xF8});            // mov rax, rdi
    a.db({0x48, 0x01, 0xF0});            // add rax, rsi
    a.db({0xC3});
    // mul_pair
    a.db({0x48, 0x89, 0xF8});            // mov rax, rdi
    a.db({0x48, 0x0F, 0xAF, 0xC6});      // imul rax, rsi
    a.db({0xC3});
    // unused_leaf: reached only via the prologue scan
    a.db({0x55, 0x48, 0x89, 0xE5});
    a.db({0xB8, 0x07, 0x00, 0x00, 0x00});  // mov eax, 7
    a.db({0x5D, 0xC3});
    (void)main_va;
    (void)leaf_va;
    return a.bytes();
}

// ---------------------------------------------------------------- PE side

struct PeSec {
    std::string name;
    uint32_t rva;
    std::vector<uint8_t> bytes;
    uint32_t chars;
};

class PeBuilder {
public:
    uint64_t image_base = 0x140000000ULL;
    uint32_t entry_rva = 0;
    std::pair<uint32_t, uint32_t> export_dir{0, 0};
    std::pair<uint32_t, uint32_t> import_dir{0, 0};
    std::vector<PeSec> secs;

    std::vector<uint8_t> build() const {
        const uint32_t file_align = 0x200;
        size_t header_end = 0x80 + 4 + 20 + 0xF0 + 40 * secs.size();
        uint32_t size_headers = static_cast<uint32_t>(align_up(header_end, file_align));

        std::vector<uint32_t> raw_off;
        uint32_t cursor = size_headers;
        uint32_t image_end = 0x1000;
        for (const auto& s : secs) {
            raw_off.push_back(cursor);
            cursor += static_cast<uint32_t>(align_up(s.bytes.size(), file_align));
            image_end = std::max<uint32_t>(
                image_end, s.rva + static_cast<uint32_t>(align_up(s.bytes.size(), 0x1000)));
        }

        std::vector<uint8_t> out;
        out.push_back('M');
        out.push_back('Z');
        pad_to(out, 0x3C);
        push32(out, 0x80);
        pad_to(out, 0x80);
        push32(out, 0x00004550); // "PE\0\0"
        // COFF
        push16(out, 0x8664);
        push16(out, static_cast<uint16_t>(secs.size()));
        push32(out, 0); // timestamp
        push32(out, 0); // symbol table
        push32(out, 0); // nsyms
        push16(out, 0xF0);
        push16(out, 0x0022); // EXECUTABLE | LARGE_ADDRESS_AWARE
        // Optional header, PE32+
        size_t opt = out.size();
        push16(out, 0x20B);
        out.push_back(14); // linker major
        out.push_back(0);
        push32(out, 0); // sizeOfCode
        push32(out, 0); // sizeOfInitializedData
        push32(out, 0); // sizeOfUninitializedData
        push32(out, entry_rva);
        push32(out, 0x1000); // baseOfCode
        push64(out, image_base);
        push32(out, 0x1000);      // section alignment
        push32(out, file_align);  // file alignment
        push16(out, 6);
        push16(out, 0); // OS version
        push16(out, 0);
        push16(out, 0); // image version
        push16(out, 6);
        push16(out, 0); // subsystem version
        push32(out, 0); // win32 version
        push32(out, image_end);
        push32(out, size_headers);
        push32(out, 0); // checksum
        push16(out, 3); // console subsystem
        push16(out, 0x8160);
        push64(out, 0x100000);
        push64(out, 0x1000);
        push64(out, 0x100000);
        push64(out, 0x1000);
        push32(out, 0);  // loader flags
        push32(out, 16); // rva+size count
        for (int i = 0; i < 16; ++i) {
            uint32_t rva = 0, size = 0;
            if (i == 0) std::tie(rva, size) = export_dir;
            if (i == 1) std::tie(rva, size) = import_dir;
            push32(out, rva);
            push32(out, size);
        }
        if (out.size() - opt != 0xF0) std::abort();
        // section table
        for (size_t i = 0; i < secs.size(); ++i) {
            std::string n = secs[i].name;
            n.resize(8, 0);
            out.insert(out.end(), n.begin(), n.end());
            push32(out, static_cast<uint32_t>(secs[i].bytes.size())); // virtual size
            push32(out, secs[i].rva);
            push32(out, static_cast<uint32_t>(align_up(secs[i].bytes.size(), file_align)));
            push32(out, raw_off[i]);
            push32(out, 0); // relocs
            push32(out, 0); // lines
            push16(out, 0);
            push16(out, 0);
            push32(out, secs[i].chars);
        }
        pad_to(out, size_headers);
        for (size_t i = 0; i < secs.size(); ++i) {
            pad_to(out, raw_off[i]);
            out.insert(out.end(), secs[i].bytes.begin(), secs[i].bytes.end());
            pad_to(out, align_up(out.size(), file_align));
        }
        return out;
    }
};

constexpr uint32_t PE_TEXT = 0x60000020;  // CODE | EXECUTE | READ
constexpr uint32_t PE_RDATA = 0x40000040; // INITIALIZED | READ
constexpr uint32_t PE_TEXT_RVA = 0x1000, PE_RDATA_RVA = 0x2000;

struct DllImport {
    std::string dll;
    std::vector<std::string> names; // "ord#N" imports by ordinal
};

struct ImportBlob {
    std::vector<uint8_t> bytes;
    uint32_t dir_rva = 0, dir_size = 0;
    std::map<std::string, uint32_t> slot_rva; // import name -> IAT slot RVA
};

ImportBlob build_pe_imports(uint32_t base_rva, const std::vector<DllImport>& dlls) {
    size_t entries = 0;
    for (const auto& d : dlls) entries += d.names.size() + 1;

    uint32_t iat = 0;
    uint32_t ilt = static_cast<uint32_t>(iat + 8 * entries);
    uint32_t desc = static_cast<uint32_t>(ilt + 8 * entries);
    uint32_t hints = static_cast<uint32_t>(desc + 20 * (dlls.size() + 1));

    // lay out hint/name entries and dll names
    std::map<std::string, uint32_t> hint_off;
    uint32_t cur = hints;
    for (const auto& d : dlls) {
        for (const auto& n : d.names) {
            if (n.rfind("ord#", 0) == 0) continue;
            hint_off[n] = cur;
            cur += static_cast<uint32_t>(2 + n.size() + 1);
        }
    }
    std::map<std::string, uint32_t> dll_off;
    for (const auto& d : dlls) {
        dll_off[d.dll] = cur;
        cur += static_cast<uint32_t>(d.dll.size() + 1);
    }

    ImportBlob blob;
    blob.bytes.resize(cur, 0);
    auto entry_value = [&](const std::string& n) -> uint64_t {
        if (n.rfind("ord#", 0) == 0) {
            return (1ULL << 63) | static_cast<uint64_t>(std::stoul(n.substr(4)));
        }
        return base_rva + hint_off[n];
    };

    size_t slot = 0;
    size_t dll_first_slot = 0;
    for (size_t di = 0; di < dlls.size(); ++di) {
        dll_first_slot = slot;
        for (const auto& n : dlls[di].names) {
            uint64_t v = entry_value(n);
            for (int k = 0; k < 8; ++k) {
                blob.bytes[iat + 8 * slot + k] = (v >> (8 * k)) & 0xFF;
                blob.bytes[ilt + 8 * slot + k] = (v >> (8 * k)) & 0xFF;
            }
            blob.slot_rva[n] = static_cast<uint32_t>(base_rva + iat + 8 * slot);
            ++slot;
        }
        ++slot; // null terminator entry
        size_t d = desc + 20 * di;
        put32(blob.bytes, d, static_cast<uint32_t>(base_rva + ilt + 8 * dll_first_slot));
        put32(blob.bytes, d + 12, base_rva + dll_off.at(dlls[di].dll));
        put32(blob.bytes, d + 16, static_cast<uint32_t>(base_rva + iat + 8 * dll_first_slot));
    }
    for (const auto& [n, off] : hint_off) {
        blob.bytes[off] = 0; // hint
        blob.bytes[off + 1] = 0;
        std::copy(n.begin(), n.end(), blob.bytes.begin() + off + 2);
    }
    for (const auto& [n, off] : dll_off) {
        std::copy(n.begin(), n.end(), blob.bytes.begin() + off);
    }
    blob.dir_rva = base_rva + desc;
    blob.dir_size = static_cast<uint32_t>(20 * (dlls.size() + 1));
    return blob;
}

struct ExportBlob {
    std::vector<uint8_t> bytes;
    uint32_t dir_rva = 0, dir_size = 0;
};

ExportBlob build_pe_exports(uint32_t base_rva, const std::string& dll,
                            const std::vector<std::pair<std::string, uint32_t>>& named,
                            const std::vector<uint32_t>& unnamed) {
    uint32_t nfuncs = static_cast<uint32_t>(named.size() + unnamed.size());
    uint32_t nnames = static_cast<uint32_t>(named.size());
    uint32_t eat = 40;
    uint32_t nameptr = eat + 4 * nfuncs;
    uint32_t ords = nameptr + 4 * nnames;
    uint32_t strs = ords + 2 * nnames;

    ExportBlob blob;
    std::vector<uint8_t>& out = blob.bytes;
    out.resize(strs, 0);
    put32(out, 16, 1); // ordinal base
    put32(out, 20, nfuncs);
    put32(out, 24, nnames);
    put32(out, 28, base_rva + eat);
    put32(out, 32, base_rva + nameptr);
    put32(out, 36, base_rva + ords);
    for (size_t i = 0; i < named.size(); ++i) put32(out, eat + 4 * i, named[i].second);
    for (size_t i = 0; i < unnamed.size(); ++i) {
        put32(out, eat + 4 * (named.size() + i), unnamed[i]);
    }
    for (size_t i = 0; i < named.size(); ++i) {
        put32(out, nameptr + 4 * i, base_rva + static_cast<uint32_t>(out.size()));
        out.insert(out.end(), named[i].first.begin(), named[i].first.end());
        out.push_back(0);
        out[ords + 2 * i] = static_cast<uint8_t>(i);
        out[ords + 2 * i + 1] = 0;
    }
    put32(out, 12, base_rva + static_cast<uint32_t>(out.size()));
    out.insert(out.end(), dll.begin(), dll.end());
    out.push_back(0);
    blob.dir_rva = base_rva;
    blob.dir_size = static_cast<uint32_t>(out.size());
    return blob;
}

// -------------------------------------------------------------- fixtures

using Bytes = std::vector<uint8_t>;

Bytes fx_elf_ret() {
    Asm a(TEXT_VA);
    a.db({0xB8, 0x2A, 0x00, 0x00, 0x00, 0xC3}); // mov eax,42; ret
    return stripped_elf(TEXT_VA, a.bytes());
}

Bytes fx_elf_diamond() {
    Bytes ro;
    for (int i = 0; i < 16; ++i) ro.push_back(static_cast<uint8_t>(i + 1));
    return stripped_elf(TEXT_VA, diamond_text(), ro);
}

Bytes fx_elf_calls() { return stripped_elf(TEXT_VA, calls_text()); }

Bytes fx_elf_symtab() {
    // section indices: .text=1, .symtab=2, .strtab=3
    ElfBuilder e;
    e.entry = TEXT_VA;
    e.add({".text", 1, SHF_ALLOC | SHF_EXEC, TEXT_VA, calls_text()});
    auto [tab, str] = build_elf_symbols({{"main", TEXT_VA, true},
                                         {"add_pair", TEXT_VA + 0x10, true},
                                         {"mul_pair", TEXT_VA + 0x17, true},
                                         {"unused_leaf", TEXT_VA + 0x1F, true}},
                                        /*text_shndx=*/1);
    e.add({".symtab", 2, 0, 0, tab, /*link=strtab*/ 3, 24});
    e.add({".strtab", 3, 0, 0, str});
    return e.build();
}

Bytes fx_elf_loop() {
    Asm a(TEXT_VA);
    a.db({0x31, 0xC0});                          // xor eax, eax
    a.db({0xB9, 0x05, 0x00, 0x00, 0x00});        // mov ecx, 5
    uint64_t head = a.here();
    a.db({0x01, 0xC8});                          // add eax, ecx
    a.db({0xFF, 0xC9});                          // dec ecx
    a.db({0x83, 0xF9, 0x00});                    // cmp ecx, 0
    a.db({0x75}).rel8(head);                     // jnz head
    a.db({0xC3});
    return stripped_elf(TEXT_VA, a.bytes());
}

Bytes fx_elf_stripped() {
    Asm a(TEXT_VA);
    a.db({0xB8, 0x01, 0x00, 0x00, 0x00, 0xC3}); // entry: mov eax,1; ret
    a.db({0xCC, 0xCC});                         // padding
    a.db({0x55, 0x48, 0x89, 0xE5});             // orphan: push rbp; mov rbp,rsp
    a.db({0xB8, 0x07, 0x00, 0x00, 0x00});       //         mov eax, 7
    a.db({0x5D, 0xC3});                         //         pop rbp; ret
    return stripped_elf(TEXT_VA, a.bytes());
}

// Seven branch-free leaves exercising register widths, shifts, extends, and
// memory traffic, plus an entry that calls each. Leaves come first so every
// call displacement is backward.
Bytes fx_elf_alu() {
    Asm a(TEXT_VA);
    uint64_t f1 = a.here();
    a.db({0x48, 0x89, 0xF8});                   // mov rax, rdi
    a.db({0x48, 0x01, 0xF0});                   // add rax, rsi
    a.db({0x48, 0x29, 0xD0});                   // sub rax, rdx
    a.db({0xC3});
    uint64_t f2 = a.here();
    a.db({0x6B, 0xC1, 0x07});                   // imul eax, ecx, 7
    a.db({0x29, 0xD0});                         // sub eax, edx
    a.db({0xC1, 0xE0, 0x03});                   // shl eax, 3
    a.db({0xC3});
    uint64_t f3 = a.here();
    a.db({0xC6, 0xC2, 0x9C});                   // mov dl, 0x9c
    a.db({0x0F, 0xB6, 0xC2});                   // movzx eax, dl
    a.db({0x48, 0x0F, 0xBE, 0xCA});             // movsx rcx, dl
    a.db({0x48, 0x01, 0xC8});                   // add rax, rcx
    a.db({0xC3});
    uint64_t f4 = a.here();
    a.db({0x48, 0x8B, 0x41, 0x08});             // mov rax, [rcx+8]
    a.db({0x48, 0x83, 0xC0, 0x05});             // add rax, 5
    a.db({0x48, 0x89, 0x41, 0x10});             // mov [rcx+16], rax
    a.db({0xC3});
    uint64_t f5 = a.here();
    a.db({0x55, 0x48, 0x89, 0xE5});             // push rbp; mov rbp, rsp
    a.db({0x48, 0xC7, 0xC0, 0x34, 0x12, 0x00, 0x00}); // mov rax, 0x1234
    a.db({0x5D, 0xC3});                         // pop rbp; ret
    uint64_t f6 = a.here();
    a.db({0x48, 0x89, 0xF0});                   // mov rax, rsi
    a.db({0x48, 0xC1, 0xE8, 0x04});             // shr rax, 4
    a.db({0x48, 0xFF, 0xC8});                   // dec rax
    a.db({0x48, 0x31, 0xF8});                   // xor rax, rdi
    a.db({0xC3});
    uint64_t f7 = a.here();
    a.db({0xC6, 0xC2, 0x30});                   // mov dl, 0x30
    a.db({0x80, 0xC2, 0x11});                   // add dl, 0x11
    a.db({0x0F, 0xB6, 0xC2});                   // movzx eax, dl
    a.db({0xC3});
    uint64_t entry = a.here();
    a.db({0x55, 0x48, 0x89, 0xE5});
    for (uint64_t f : {f1, f2, f3, f4, f5, f6, f7}) a.db({0xE8}).rel32(f);
    a.db({0x5D, 0xC3});
    return stripped_elf(entry, a.bytes());
}

Bytes fx_elf_strings() {
    Asm ro(RODATA_VA);
    uint64_t hello_va = ro.here();
    ro.ascii("hello world");
    uint64_t fmt_va = ro.here();
    ro.ascii("%s: %d");
    uint64_t ver_va = ro.here();
    ro.ascii("version 2.1.7");
    ro.ascii("ab"); // below the 4-char floor, must not be reported

    Asm a(TEXT_VA);
    // entry references two literals
    a.db({0x48, 0x8D, 0x05}).rel32(hello_va); // lea rax, [rip -> "hello world"]
    a.db({0x48, 0x8D, 0x0D}).rel32(fmt_va);   // lea rcx, [rip -> "%s: %d"]
    a.db({0xC3});
    // second function (prologue-discovered) references the third
    a.db({0x55, 0x48, 0x89, 0xE5});
    a.db({0x48, 0x8D, 0x15}).rel32(ver_va);   // lea rdx, [rip -> "version 2.1.7"]
    a.db({0x5D, 0xC3});
    return stripped_elf(TEXT_VA, a.bytes(), ro.bytes());
}

Bytes fx_elf_imports() {
    const uint64_t thunk_memcpy = TEXT_VA, thunk_strlen = TEXT_VA + 6,
                   entry_va = TEXT_VA + 18;
    Asm a(TEXT_VA);
    a.db({0xFF, 0x25}).rel32(GOT_VA);        // jmp [rip -> got+0]  (memcpy)
    a.db({0xFF, 0x25}).rel32(GOT_VA + 8);    // jmp [rip -> got+8]  (strlen)
    a.db({0xFF, 0x25}).rel32(GOT_VA + 16);   // jmp [rip -> got+16] (free)
    // entry
    a.db({0x55, 0x48, 0x89, 0xE5});
    a.db({0x48, 0xC7, 0xC2, 0x20, 0x00, 0x00, 0x00}); // mov rdx, 0x20
    a.db({0xE8}).rel32(thunk_memcpy);
    uint64_t helper_call_site = a.here();
    a.db({0xE8, 0, 0, 0, 0}); // call exported_helper, patched below
    a.db({0x5D, 0xC3});
    uint64_t helper_va = a.here();
    a.db({0x55, 0x48, 0x89, 0xE5});
    a.db({0xE8}).rel32(thunk_strlen);
    a.db({0x5D, 0xC3});
    std::vector<uint8_t> text = a.bytes();
    int64_t rel = static_cast<int64_t>(helper_va) -
                  static_cast<int64_t>(helper_call_site + 5);
    put32(text, helper_call_site - TEXT_VA + 1, static_cast<uint32_t>(rel));

    // section indices: .text=1, .got.plt=2, .dynsym=3, .dynstr=4, .rela.plt=5
    ElfBuilder e;
    e.entry = entry_va;
    e.add({".text", 1, SHF_ALLOC | SHF_EXEC, TEXT_VA, std::move(text)});
    e.add({".got.plt", 1, SHF_ALLOC | SHF_WRITE, GOT_VA, Bytes(24, 0)});
    auto [dynsym, dynstr] = build_elf_symbols({{"memcpy", 0, false},
                                               {"strlen", 0, false},
                                               {"free", 0, false},
                                               {"exported_helper", helper_va, true}},
                                              /*text_shndx=*/1);
    e.add({".dynsym", 11, SHF_ALLOC, 0x403000, dynsym, /*link=dynstr*/ 4, 24});
    e.add({".dynstr", 3, SHF_ALLOC, 0x403100, dynstr});
    e.add({".rela.plt", 4, SHF_ALLOC, 0x403200,
           build_jump_slot_relas({{GOT_VA, 1}, {GOT_VA + 8, 2}, {GOT_VA + 16, 3}}),
           /*link=dynsym*/ 3, 24});
    return e.build();
}

Bytes fx_elf_memcpy() {
    const uint64_t thunk_va = TEXT_VA, entry_va = TEXT_VA + 6;
    Asm ro(RODATA_VA);
    ro.ascii("payload");

    Asm a(TEXT_VA);
    a.db({0xFF, 0x25}).rel32(GOT_VA); // jmp [rip -> got slot] (memcpy)
    a.db({0x55, 0x48, 0x89, 0xE5});
    a.db({0x48, 0x8D, 0x05}).rel32(RODATA_VA); // lea rax, [rip -> "payload"]
    a.db({0xE8}).rel32(thunk_va);
    a.db({0x5D, 0xC3});

    ElfBuilder e;
    e.entry = entry_va;
    int ti = e.add({".text", 1, SHF_ALLOC | SHF_EXEC, TEXT_VA, a.bytes()});
    e.add({".rodata", 1, SHF_ALLOC, RODATA_VA, ro.bytes()});
    e.add({".got.plt", 1, SHF_ALLOC | SHF_WRITE, GOT_VA, Bytes(8, 0)});
    auto [dynsym, dynstr] = build_elf_symbols({{"memcpy", 0, false}},
                                              static_cast<uint16_t>(ti));
    e.add({".dynsym", 11, SHF_ALLOC, 0x403000, dynsym, /*link=*/5, 24});
    e.add({".dynstr", 3, SHF_ALLOC, 0x403100, dynstr});
    e.add({".rela.plt", 4, SHF_ALLOC, 0x403200, build_jump_slot_relas({{GOT_VA, 1}}),
           /*link=*/4, 24});
    return e.build();
}

Bytes fx_pe_minimal() {
    Asm a(0x140000000ULL + PE_TEXT_RVA);
    a.db({0xB8, 0x2A, 0x00, 0x00, 0x00, 0xC3});
    PeBuilder p;
    p.entry_rva = PE_TEXT_RVA;
    p.secs.push_back({".text", PE_TEXT_RVA, a.bytes(), PE_TEXT});
    return p.build();
}

Bytes fx_pe_diamond() {
    const uint64_t base = 0x140000000ULL;
    Asm a(base + PE_TEXT_RVA);
    a.db({0x48, 0x83, 0xF9, 0x00});
    a.db({0x74}).rel8(base + PE_TEXT_RVA + 0x0E);
    a.db({0x48, 0x8D, 0x05}).rel32(base + PE_RDATA_RVA);
    a.db({0xC3});
    a.db({0x48, 0x8B, 0x41, 0x18});
    a.db({0xEB}).rel8(base + PE_TEXT_RVA + 0x0D);
    PeBuilder p;
    p.entry_rva = PE_TEXT_RVA;
    p.secs.push_back({".text", PE_TEXT_RVA, a.bytes(), PE_TEXT});
    p.secs.push_back({".rdata", PE_RDATA_RVA, Bytes(16, 0x11), PE_RDATA});
    return p.build();
}

Bytes fx_pe_imports() {
    const uint64_t base = 0x140000000ULL;
    ImportBlob imp = build_pe_imports(
        PE_RDATA_RVA, {{"KERNEL32.dll", {"ExitProcess", "GetTickCount"}},
                       {"msvcrt.dll", {"memcpy", "ord#42"}}});

    const uint64_t entry_va = base + PE_TEXT_RVA;
    Asm a(entry_va);
    a.db({0x48, 0x83, 0xEC, 0x28});                          // sub rsp, 0x28
    a.db({0xFF, 0x15}).rel32(base + imp.slot_rva["GetTickCount"]);
    uint64_t call_second = a.here();
    a.db({0xE8, 0, 0, 0, 0});
    a.db({0x48, 0x83, 0xC4, 0x28});                          // add rsp, 0x28
    a.db({0xC3});
    uint64_t second_va = a.here();
    a.db({0x48, 0x83, 0xEC, 0x28});
    a.db({0xFF, 0x15}).rel32(base + imp.slot_rva["memcpy"]);
    a.db({0xFF, 0x15}).rel32(base + imp.slot_rva["ExitProcess"]);
    a.db({0x48, 0x83, 0xC4, 0x28});
    a.db({0xC3});
    std::vector<uint8_t> text = a.bytes();
    int64_t rel = static_cast<int64_t>(second_va) - static_cast<int64_t>(call_second + 5);
    put32(text, call_second - entry_va + 1, static_cast<uint32_t>(rel));

    PeBuilder p;
    p.entry_rva = PE_TEXT_RVA;
    p.import_dir = {imp.dir_rva, imp.dir_size};
    p.secs.push_back({".text", PE_TEXT_RVA, std::move(text), PE_TEXT});
    p.secs.push_back({".rdata", PE_RDATA_RVA, imp.bytes, PE_RDATA});
    return p.build();
}

Bytes fx_pe_exports() {
    const uint64_t base = 0x140000000ULL;
    Asm a(base + PE_TEXT_RVA);
    // entry
    a.db({0xB8, 0x00, 0x00, 0x00, 0x00, 0xC3});
    uint32_t initialize_rva = static_cast<uint32_t>(a.here() - base);
    a.db({0xB8, 0x01, 0x00, 0x00, 0x00, 0xC3});
    uint32_t compute_rva = static_cast<uint32_t>(a.here() - base);
    a.db({0x48, 0x89, 0xF8});       // mov rax, rdi
    a.db({0x48, 0x01, 0xF0});       // add rax, rsi
    a.db({0xC3});
    uint32_t secret_rva = static_cast<uint32_t>(a.here() - base);
    a.db({0xB8, 0x63, 0x00, 0x00, 0x00, 0xC3}); // exported by ordinal only

    ExportBlob exp = build_pe_exports(PE_RDATA_RVA, "fixture.dll",
                                      {{"initialize", initialize_rva},
                                       {"compute", compute_rva}},
                                      {secret_rva});
    PeBuilder p;
    p.entry_rva = PE_TEXT_RVA;
    p.export_dir = {exp.dir_rva, exp.dir_size};
    p.secs.push_back({".text", PE_TEXT_RVA, a.bytes(), PE_TEXT});
    p.secs.push_back({".rdata", PE_RDATA_RVA, exp.bytes, PE_RDATA});
    return p.build();
}

Bytes fx_pe_strings() {
    const uint64_t base = 0x140000000ULL;
    Asm ro(base + PE_RDATA_RVA);
    uint64_t cfg_va = ro.here();
    ro.ascii("config loaded");
    uint64_t err_va = ro.here();
    ro.ascii("error: %d");

    Asm a(base + PE_TEXT_RVA);
    a.db({0x48, 0x8D, 0x05}).rel32(cfg_va);
    a.db({0x48, 0x8D, 0x0D}).rel32(err_va);
    a.db({0xC3});

    PeBuilder p;
    p.entry_rva = PE_TEXT_RVA;
    p.secs.push_back({".text", PE_TEXT_RVA, a.bytes(), PE_TEXT});
    p.secs.push_back({".rdata", PE_RDATA_RVA, ro.bytes(), PE_RDATA});
    return p.build();
}

} // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: fixturegen <output-dir>\n");
        return 2;
    }
    std::filesystem::path out(argv[1]);
    std::filesystem::create_directories(out);

    const std::map<std::string, Bytes> fixtures = {
        {"elf_ret.bin", fx_elf_ret()},
        {"elf_diamond.bin", fx_elf_diamond()},
        {"elf_calls.bin", fx_elf_calls()},
        {"elf_symtab.bin", fx_elf_symtab()},
        {"elf_loop.bin", fx_elf_loop()},
        {"elf_stripped.bin", fx_elf_stripped()},
        {"elf_alu.bin", fx_elf_alu()},
        {"elf_strings.bin", fx_elf_strings()},
        {"elf_imports.bin", fx_elf_imports()},
        {"elf_memcpy.bin", fx_elf_memcpy()},
        {"pe_minimal.bin", fx_pe_minimal()},
        {"pe_diamond.bin", fx_pe_diamond()},
        {"pe_imports.bin", fx_pe_imports()},
        {"pe_exports.bin", fx_pe_exports()},
        {"pe_strings.bin", fx_pe_strings()},
    };
    for (const auto& [name, bytes] : fixtures) {
        std::ofstream f(out / name, std::ios::binary);
        f.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
        std::printf("%s %zu bytes\n", name.c_str(), bytes.size());
    }
    return 0;
}
