#!/usr/bin/env python3
"""Writes fixtures/MANIFEST: one `<sha256>  <name>` line per fixture binary.

Hashes are computed here, independently of the C++ code under test, so the
test suite can cross-check both file integrity and its own SHA-256 plumbing.
"""

import hashlib
from pathlib import Path

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


def main() -> None:
    lines = []
    for f in sorted(FIXTURES.glob("*.bin")):
        digest = hashlib.sha256(f.read_bytes()).hexdigest()
        lines.append(f"{digest}  {f.name}")
    (FIXTURES / "MANIFEST").write_text("\n".join(lines) + "\n")
    print(f"{len(lines)} entries")


if __name__ == "__main__":
    main()
