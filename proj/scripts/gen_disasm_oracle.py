#!/usr/bin/env python3
"""Freeze an objdump reference listing for the decoder conformance test.

Writes tests/data/disasm_oracle/blob1.bin (handwritten x86-64 code bytes)
and blob1.txt (objdump -D -b binary output for the same bytes). Run once;
the outputs are committed so the test suite never needs objdump installed.
"""

import subprocess
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "tests" / "data" / "disasm_oracle"

# One long straight-line stream drawn from the supported instruction set.
CHUNKS = [
    "55",                        # push rbp
    "48 89 E5",                  # mov rbp,rsp
    "48 83 EC 20",               # sub rsp,0x20
    "48 89 7D F8",               # mov [rbp-0x8],rdi
    "8B 45 FC",                  # mov eax,[rbp-0x4]
    "48 8B 41 18",               # mov rax,[rcx+0x18]
    "48 8D 05 10 00 00 00",      # lea rax,[rip+0x10]
    "48 8D 04 8A",               # lea rax,[rdx+rcx*4]
    "B8 2A 00 00 00",            # mov eax,0x2a
    "48 B8 88 77 66 55 44 33 22 11",  # mov rax,0x1122334455667788
    "C7 45 F0 05 00 00 00",      # mov dword [rbp-0x10],5
    "C6 45 EF 41",               # mov byte [rbp-0x11],0x41
    "48 31 C0",                  # xor rax,rax
    "48 01 D0",                  # add rax,rdx
    "48 29 C8",                  # sub rax,rcx
    "48 21 D8",                  # and rax,rbx
    "48 09 C8",                  # or rax,rcx
    "48 39 C8",                  # cmp rax,rcx
    "48 83 F9 00",               # cmp rcx,0
    "48 85 C0",                  # test rax,rax
    "F7 C0 01 00 00 00",         # test eax,0x1
    "0F AF C2",                  # imul eax,edx
    "6B C0 03",                  # imul eax,eax,3
    "69 C0 E8 03 00 00",         # imul eax,eax,1000
    "48 C1 E0 04",               # shl rax,4
    "48 C1 E8 02",               # shr rax,2
    "48 C1 F8 03",               # sar rax,3
    "D1 E0",                     # shl eax,1
    "48 D3 E0",                  # shl rax,cl
    "0F B6 C0",                  # movzx eax,al
    "0F B7 C0",                  # movzx eax,ax
    "0F BE C0",                  # movsx eax,al
    "0F BF C0",                  # movsx eax,ax
    "48 63 C8",                  # movsxd rcx,eax
    "FF C0",                     # inc eax
    "FF C8",                     # dec eax
    "FE 45 FF",                  # inc byte [rbp-0x1]
    "FF 75 F8",                  # push qword [rbp-0x8]
    "FF D0",                     # call rax
    "FF 15 10 00 00 00",         # call [rip+0x10]
    "FF 25 20 00 00 00",         # jmp [rip+0x20]
    "6A 01",                     # push 0x1
    "68 00 01 00 00",            # push 0x100
    "50",                        # push rax
    "41 57",                     # push r15
    "58",                        # pop rax
    "41 5F",                     # pop r15
    "E8 00 00 00 00",            # call next
    "E9 00 00 00 00",            # jmp next
    "EB 00",                     # jmp short next
    "74 05",                     # je +5
    "0F 84 00 01 00 00",         # je near
    "0F 8F F0 00 00 00",         # jg near
    "7C 02",                     # jl short
    "90",                        # nop
    "66 90",                     # xchg ax,ax
    "0F 1F 40 00",               # nop dword [rax+0x0]
    "0F 1F 84 00 00 00 00 00",   # nop dword [rax+rax*1+0x0]
    "84 C0",                     # test al,al
    "88 C1",                     # mov cl,al
    "8A 45 EF",                  # mov al,[rbp-0x11]
    "80 7D EF 41",               # cmp byte [rbp-0x11],0x41
    "81 F9 00 10 00 00",         # cmp ecx,0x1000
    "83 C0 01",                  # add eax,1
    "3B 45 FC",                  # cmp eax,[rbp-0x4]
    "48 8B 04 25 00 10 60 00",   # mov rax,[0x601000]
    "4C 8B 2C C8",               # mov r13,[rax+rcx*8]
    "4A 8D 04 3F",               # lea rax,[rdi+r15*1]
    "4D 89 C1",                  # mov r9,r8
    "45 31 C0",                  # xor r8d,r8d
    "41 83 F8 05",               # cmp r8d,5
    "C9",                        # leave
    "C2 10 00",                  # ret 0x10
    "F3 C3",                     # rep ret
    "CC",                        # int3
    "F4",                        # hlt
    "0F 0B",                     # ud2
    "FF E0",                     # jmp rax
    "C3",                        # ret
]


def main() -> None:
    blob = bytes(int(b, 16) for chunk in CHUNKS for b in chunk.split())
    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "blob1.bin").write_bytes(blob)
    listing = subprocess.run(
        ["objdump", "-D", "-b", "binary", "-m", "i386:x86-64", str(OUT / "blob1.bin")],
        check=True,
        capture_output=True,
        text=True,
    ).stdout
    (OUT / "blob1.txt").write_text(listing)
    print(f"wrote {len(blob)} bytes and {len(listing.splitlines())} listing lines")


if __name__ == "__main__":
    main()
