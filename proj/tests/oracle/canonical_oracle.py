#!/usr/bin/env python3
"""Independent canonicalizer for the empty-runs golden fixture.

Reimplements the canonical session encoding from the format rules alone
(sorted keys, no insignificant whitespace, UTF-8, minimal-decimal integers,
lexical metric values) and hashes the bytes with the standalone sha256sum
utility. Emits "<64hex>" on stdout. Used to freeze the golden digest and to
cross-check the library's canonicalizer from a second implementation.
"""

import json
import subprocess
import sys


def canonical_bytes(session: dict) -> bytes:
    return json.dumps(session, sort_keys=True, separators=(",", ":"), ensure_ascii=False).encode(
        "utf-8"
    )


EMPTY_RUNS_FIXTURE = {
    "created_at": "2026-01-02T03:04:05Z",
    "environment": {
        "framework_versions": [["keras", "3.1.0"]],
        "random_seeds": [["global", 42]],
        "tier": "minimal",
    },
    "format_version": 1,
    "run_count": 0,
    "runs": [],
    "session_id": "00112233445566778899aabbccddeeff",
    "state": "sealed",
    "tier": "minimal",
}


def main() -> int:
    data = canonical_bytes(EMPTY_RUNS_FIXTURE)
    if "--dump" in sys.argv:
        sys.stdout.buffer.write(data)
        return 0
    out = subprocess.run(["sha256sum"], input=data, capture_output=True, check=True)
    print(out.stdout.decode().split()[0])
    return 0


if __name__ == "__main__":
    sys.exit(main())
