#!/usr/bin/env python3
"""Download the benchmark signed-network datasets into datasets/.

Out-of-band helper: the sigaug CLI itself never performs network calls.
Downloads are gunzipped, SHA-256 hashed, and verified against
datasets/CHECKSUMS when that file exists; otherwise the observed hashes are
recorded there so later fetches are pinned.

Usage: python scripts/fetch_datasets.py [name ...]
       (no arguments: fetch bitcoin-alpha and bitcoin-otc)
"""

import gzip
import hashlib
import sys
import urllib.request
from pathlib import Path

DATASETS = {
    "bitcoin-alpha": (
        "https://snap.stanford.edu/data/soc-sign-bitcoinalpha.csv.gz",
        "soc-sign-bitcoinalpha.csv",
    ),
    "bitcoin-otc": (
        "https://snap.stanford.edu/data/soc-sign-bitcoinotc.csv.gz",
        "soc-sign-bitcoinotc.csv",
    ),
    "epinions": (
        "https://snap.stanford.edu/data/soc-sign-epinions.txt.gz",
        "soc-sign-epinions.txt",
    ),
    "slashdot": (
        "https://snap.stanford.edu/data/soc-sign-Slashdot090221.txt.gz",
        "soc-sign-Slashdot090221.txt",
    ),
}

OUT_DIR = Path(__file__).resolve().parent.parent / "datasets"
CHECKSUMS = OUT_DIR / "CHECKSUMS"


def load_checksums() -> dict:
    pinned = {}
    if CHECKSUMS.exists():
        for line in CHECKSUMS.read_text().splitlines():
            if line.strip():
                digest, filename = line.split(None, 1)
                pinned[filename.strip()] = digest
    return pinned


def save_checksums(pinned: dict) -> None:
    lines = [f"{digest}  {filename}" for filename, digest in sorted(pinned.items())]
    CHECKSUMS.write_text("\n".join(lines) + "\n")


def fetch(name: str, pinned: dict) -> None:
    url, filename = DATASETS[name]
    target = OUT_DIR / filename
    if target.exists():
        digest = hashlib.sha256(target.read_bytes()).hexdigest()
        print(f"{name}: already present ({digest[:16]}...)")
    else:
        print(f"{name}: downloading {url}")
        raw = urllib.request.urlopen(url, timeout=120).read()
        data = gzip.decompress(raw) if url.endswith(".gz") else raw
        target.write_bytes(data)
        digest = hashlib.sha256(data).hexdigest()
        print(f"{name}: wrote {target} ({len(data)} bytes, sha256 {digest[:16]}...)")
    expected = pinned.get(filename)
    if expected is None:
        pinned[filename] = digest
        print(f"{name}: recorded sha256 in {CHECKSUMS.name}")
    elif expected != digest:
        raise SystemExit(
            f"{name}: sha256 mismatch!\n  expected {expected}\n  got      {digest}"
        )
    else:
        print(f"{name}: checksum verified")


def main() -> None:
    names = sys.argv[1:] or ["bitcoin-alpha", "bitcoin-otc"]
    unknown = [n for n in names if n not in DATASETS]
    if unknown:
        raise SystemExit(f"unknown datasets: {unknown}; choose from {sorted(DATASETS)}")
    OUT_DIR.mkdir(parents=True, exist_ok=True)
    pinned = load_checksums()
    for name in names:
        fetch(name, pinned)
    save_checksums(pinned)


if __name__ == "__main__":
    main()
