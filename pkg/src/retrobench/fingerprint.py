"""Differential reaction fingerprints and nearest-neighbor edges.

One side of a reaction is described by the set of canonical substructure
strings of all circular neighborhoods (radius 0..R, induced subgraphs)
around every atom of every molecule; conditions fold into the left side.
The fingerprint hashes the symmetric difference of the two sides' sets
into a fixed-length bit vector. Identity reactions therefore map to the
zero vector and spectators cancel exactly.

The hash is pinned (blake2b, 8-byte digest, folded modulo n_bits) and
recorded in the fingerprint file header so corpora hashed on different
machines stay comparable.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from hashlib import blake2b
from pathlib import Path
from typing import Optional

from retrobench.reactions import ReactionRecord
from retrobench.smiles import Molecule
from retrobench.smiles.canon import fragment_smiles

DEFAULT_RADIUS = 3
DEFAULT_N_BITS = 2048
HASH_ID = "blake2b64"


@dataclass(frozen=True)
class ReactionFingerprint:
    bits: int  # bitmask, bit i set via int bit i
    n_bits: int
    radius: int

    def popcount(self) -> int:
        return self.bits.bit_count()

    def to_bytes(self) -> bytes:
        return self.bits.to_bytes(self.n_bits // 8, "big")

    @staticmethod
    def from_bytes(data: bytes, n_bits: int, radius: int) -> "ReactionFingerprint":
        return ReactionFingerprint(int.from_bytes(data, "big"), n_bits, radius)


def _ball(mol: Molecule, center: int, radius: int) -> list[int]:
    seen = {center}
    frontier = [center]
    for _ in range(radius):
        nxt = []
        for u in frontier:
            for v, _ in mol.neighbors(u):
                if v not in seen:
                    seen.add(v)
                    nxt.append(v)
        if not nxt:
            break
        frontier = nxt
    return sorted(seen)


def _compute_shells(mol: Molecule, radius: int) -> frozenset[str]:
    shells: set[str] = set()
    for center in range(len(mol.atoms)):
        atom = mol.atoms[center]
        # radius 0 is just the atom label; skip the writer machinery
        shells.add(
            f"[{atom.isotope or ''}{atom.element.lower() if atom.aromatic else atom.element}"
            f"H{mol.total_h(center)}{atom.charge:+d}]"
        )
        previous_size = 1
        for r in range(1, radius + 1):
            ball = _ball(mol, center, r)
            if len(ball) == previous_size:
                break  # neighborhood stopped growing
            previous_size = len(ball)
            shells.add(fragment_smiles(mol.submolecule(ball)))
    return frozenset(shells)


_shell_cache: dict[tuple[str, int], frozenset[str]] = {}
_SHELL_CACHE_LIMIT = 200_000


def molecule_shells(mol: Molecule, radius: int) -> frozenset[str]:
    """Canonical strings of every circular substructure of radius 0..radius.

    Cached by the molecule's source text when it has one (reaction corpora
    reuse solvents, catalysts and building blocks heavily, and shells are a
    pure function of the parsed text)."""
    key = (mol.source, radius) if mol.source is not None else None
    if key is not None:
        cached = _shell_cache.get(key)
        if cached is not None:
            return cached
    result = _compute_shells(mol, radius)
    if key is not None:
        if len(_shell_cache) >= _SHELL_CACHE_LIMIT:
            _shell_cache.clear()
        _shell_cache[key] = result
    return result


def drfp(rec: ReactionRecord, radius: int = DEFAULT_RADIUS,
         n_bits: int = DEFAULT_N_BITS) -> ReactionFingerprint:
    """Hashed symmetric difference of substructure sets, left vs right."""
    if rec.invalid_fragments:
        raise ValueError(
            f"record {rec.record_id or '<anonymous>'} has invalid molecules")
    left: set[str] = set()
    for mol in rec.reactants + rec.conditions:
        left |= molecule_shells(mol, radius)
    right: set[str] = set()
    for mol in rec.products:
        right |= molecule_shells(mol, radius)

    bits = 0
    for shell in left ^ right:
        digest = blake2b(shell.encode("utf-8"), digest_size=8).digest()
        bits |= 1 << (int.from_bytes(digest, "big") % n_bits)
    return ReactionFingerprint(bits, n_bits, radius)


def drfp_many(records: list[ReactionRecord], radius: int = DEFAULT_RADIUS,
              n_bits: int = DEFAULT_N_BITS, threads: int = 1) -> list[ReactionFingerprint]:
    """Fingerprint a corpus; results are in input order and identical for
    any thread count (fingerprinting is pure)."""
    if threads <= 1:
        return [drfp(rec, radius, n_bits) for rec in records]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda r: drfp(r, radius, n_bits), records))


def tanimoto(a: ReactionFingerprint, b: ReactionFingerprint) -> float:
    """|a AND b| / |a OR b|; two zero vectors count as identical (1.0)."""
    if a.n_bits != b.n_bits:
        raise ValueError(f"fingerprint length mismatch: {a.n_bits} vs {b.n_bits}")
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def knn_edges(fps: list[ReactionFingerprint], k: int) -> list[tuple[int, int, float]]:
    """For each fingerprint its k most similar others (ties to lower index);
    returned as a deduplicated undirected edge list sorted by (src, dst)."""
    if not 1 <= k < len(fps):
        raise ValueError(f"k must satisfy 1 <= k < {len(fps)}, got {k}")
    edges: dict[tuple[int, int], float] = {}
    for i, fp in enumerate(fps):
        sims = []
        for j, other in enumerate(fps):
            if j != i:
                sims.append((-tanimoto(fp, other), j))
        sims.sort()
        for neg_sim, j in sims[:k]:
            edges[(min(i, j), max(i, j))] = -neg_sim
    return [(a, b, edges[(a, b)]) for a, b in sorted(edges)]


# -- file formats --------------------------------------------------------------

_MAGIC = b"RBFP"
_VERSION = 1


def write_fingerprints(fps: list[ReactionFingerprint], path: Path | str,
                       record_ids: Optional[list[str]] = None) -> None:
    """Binary format: magic, version, n_bits, radius, hash id, count, then
    packed rows (and a trailing id table for auditability)."""
    if not fps:
        raise ValueError("nothing to write")
    n_bits, radius = fps[0].n_bits, fps[0].radius
    if any(fp.n_bits != n_bits or fp.radius != radius for fp in fps):
        raise ValueError("fingerprints must share n_bits and radius")
    ids = record_ids or [""] * len(fps)
    hash_bytes = HASH_ID.encode("ascii")
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack(">HIHB", _VERSION, n_bits, radius, len(hash_bytes)))
        fh.write(hash_bytes)
        fh.write(struct.pack(">I", len(fps)))
        for fp in fps:
            fh.write(fp.to_bytes())
        for rid in ids:
            encoded = rid.encode("utf-8")
            fh.write(struct.pack(">H", len(encoded)))
            fh.write(encoded)


def read_fingerprints(path: Path | str) -> tuple[list[ReactionFingerprint], list[str]]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ValueError("not a fingerprint file")
        version, n_bits, radius, hash_len = struct.unpack(">HIHB", fh.read(9))
        if version != _VERSION:
            raise ValueError(f"unsupported fingerprint file version {version}")
        hash_id = fh.read(hash_len).decode("ascii")
        if hash_id != HASH_ID:
            raise ValueError(f"fingerprints hashed with {hash_id!r}, expected {HASH_ID!r}")
        (count,) = struct.unpack(">I", fh.read(4))
        row_len = n_bits // 8
        fps = [
            ReactionFingerprint.from_bytes(fh.read(row_len), n_bits, radius)
            for _ in range(count)
        ]
        ids = []
        for _ in range(count):
            (length,) = struct.unpack(">H", fh.read(2))
            ids.append(fh.read(length).decode("utf-8"))
    return fps, ids


def write_fingerprints_jsonl(fps: list[ReactionFingerprint], path: Path | str,
                             record_ids: Optional[list[str]] = None) -> None:
    ids = record_ids or [""] * len(fps)
    with open(path, "w", encoding="utf-8") as fh:
        for index, (fp, rid) in enumerate(zip(fps, ids)):
            fh.write(json.dumps({
                "index": index,
                "record_id": rid,
                "n_bits": fp.n_bits,
                "radius": fp.radius,
                "hash": HASH_ID,
                "bits_hex": fp.to_bytes().hex(),
            }, sort_keys=True) + "\n")


def write_edges_csv(edges: list[tuple[int, int, float]], path: Path | str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("src,dst,similarity\n")
        for src, dst, sim in edges:
            fh.write(f"{src},{dst},{sim:.6f}\n")
