"""Hydrogen-implicit molecular graphs for C/H/O/F chemistry.

Covers the SMILES subset needed for lubricant-like molecules (``C O F c o``,
branches, ring closures, ``- = # :`` bonds), canonical SMILES output,
composition and static descriptors, Morgan-style circular fingerprints and
binary similarity metrics.

Aromatic atoms use a pi-electron convention for valence: each aromatic bond
consumes one unit of valence and every aromatic carbon donates one more
unit to the ring system.  For an atom with two aromatic bonds this equals
counting aromatic bonds as 1.5; it also keeps ring-fusion carbons (three
aromatic bonds, e.g. in naphthalene) at valence four.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import (
    InvalidWidth,
    UnbalancedParenthesis,
    UnclosedRing,
    UnsupportedElement,
    UnsupportedToken,
    ValenceError,
    WidthMismatch,
)

VALENCE = {"C": 4, "O": 2, "F": 1}
ATOMIC_WEIGHT = {"C": 12.011, "H": 1.008, "O": 15.999, "F": 18.998}
ATOMIC_NUMBER = {"C": 6, "O": 8, "F": 9}
AROMATIC = 1.5

_BOND_SYMBOL = {"-": 1.0, "=": 2.0, "#": 3.0, ":": AROMATIC}
# Known element symbols we refuse (so callers can report "element set").
_FOREIGN_ELEMENTS = {
    "Cl", "Br", "N", "S", "P", "I", "B", "n", "s", "p", "b", "Si", "Se", "se",
}

CATEGORIES = ("H/C", "H/C/O", "H/C/F", "C/F", "H/C/O/F")

DESCRIPTOR_NAMES = (
    "mol_weight",
    "n_C",
    "n_H",
    "n_O",
    "n_F",
    "n_heavy",
    "n_rings",
    "n_aromatic",
    "branching_index",
    "longest_chain",
    "n_hbd",
    "n_rotatable",
)


class Atom(NamedTuple):
    element: str
    aromatic: bool
    ring_member: bool


@dataclass(frozen=True, eq=False)
class MolGraph:
    """Immutable molecular graph with implicit hydrogens.

    ``bonds`` holds ``(i, j, order)`` with ``i < j`` and order in
    ``{1.0, 2.0, 3.0, 1.5}`` (1.5 marks an aromatic bond).  Construction
    validates connectivity, valence and aromatic ring membership, then
    derives ring flags and hydrogen counts.
    """

    elements: tuple
    aromatic: tuple
    bonds: tuple
    hydrogens: tuple = field(init=False)
    ring_member: tuple = field(init=False)
    ring_bonds: frozenset = field(init=False)
    neighbors: tuple = field(init=False)

    def __post_init__(self):
        n = len(self.elements)
        if n == 0:
            raise ValueError("empty molecule")
        if len(self.aromatic) != n:
            raise ValueError("aromatic flags must align with elements")
        for el, ar in zip(self.elements, self.aromatic):
            if el not in VALENCE:
                raise UnsupportedElement(el)
            if ar and el not in ("C", "O"):
                raise UnsupportedToken(f"aromatic {el}")
        norm = []
        seen = set()
        nbrs = [[] for _ in range(n)]
        for i, j, order in self.bonds:
            i, j, order = int(i), int(j), float(order)
            if i == j:
                raise ValueError(f"self-loop on atom {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"bond ({i}, {j}) out of range")
            if order not in (1.0, 2.0, 3.0, AROMATIC):
                raise ValueError(f"bad bond order {order}")
            i, j = min(i, j), max(i, j)
            if (i, j) in seen:
                raise ValueError(f"duplicate bond ({i}, {j})")
            seen.add((i, j))
            norm.append((i, j, order))
            nbrs[i].append((j, order))
            nbrs[j].append((i, order))
        norm.sort()
        object.__setattr__(self, "bonds", tuple(norm))
        object.__setattr__(self, "elements", tuple(self.elements))
        object.__setattr__(self, "aromatic", tuple(bool(a) for a in self.aromatic))
        object.__setattr__(self, "neighbors", tuple(tuple(sorted(x)) for x in nbrs))
        if not _connected(self.neighbors):
            raise ValueError("molecule graph is disconnected")

        ring_bonds = _ring_bonds(self.neighbors)
        ring_atoms = [False] * n
        for i, j in ring_bonds:
            ring_atoms[i] = ring_atoms[j] = True
        object.__setattr__(self, "ring_bonds", frozenset(ring_bonds))
        object.__setattr__(self, "ring_member", tuple(ring_atoms))

        hs = []
        for a in range(n):
            el = self.elements[a]
            used = 0.0
            n_arom = 0
            for _, order in self.neighbors[a]:
                if order == AROMATIC:
                    n_arom += 1
                    used += 1.0
                else:
                    used += order
            if self.aromatic[a]:
                if not ring_atoms[a] or n_arom < 2:
                    raise ValenceError(f"aromatic atom {a} is not part of an aromatic ring")
                if el == "C":
                    used += 1.0
            elif n_arom:
                raise ValenceError(f"aromatic bond on non-aromatic atom {a}")
            h = VALENCE[el] - used
            if h < 0:
                raise ValenceError(f"valence exceeded on atom {a} ({el})")
            hs.append(int(h))
        for i, j, order in self.bonds:
            if order == AROMATIC and (i, j) not in ring_bonds:
                raise ValenceError(f"aromatic bond ({i}, {j}) outside a ring")
        object.__setattr__(self, "hydrogens", tuple(hs))

    # basic views -----------------------------------------------------
    def __len__(self):
        return len(self.elements)

    @property
    def atoms(self):
        return [Atom(e, a, r) for e, a, r in zip(self.elements, self.aromatic, self.ring_member)]

    def degree(self, a: int) -> int:
        return len(self.neighbors[a])

    @property
    def n_hydrogens(self) -> int:
        return sum(self.hydrogens)

    @property
    def n_atoms_total(self) -> int:
        """Heavy atoms plus implicit hydrogens."""
        return len(self.elements) + self.n_hydrogens

    def __repr__(self):
        return f"MolGraph({to_smiles(self)!r})"


def _connected(neighbors) -> bool:
    n = len(neighbors)
    seen = {0}
    stack = [0]
    while stack:
        a = stack.pop()
        for b, _ in neighbors[a]:
            if b not in seen:
                seen.add(b)
                stack.append(b)
    return len(seen) == n


def _ring_bonds(neighbors) -> set:
    """Bonds that lie on a cycle, i.e. every bond that is not a bridge."""
    n = len(neighbors)
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    t = 0
    for root in range(n):
        if disc[root] != -1:
            continue
        disc[root] = low[root] = t
        t += 1
        stack = [(root, -1, iter(neighbors[root]))]
        while stack:
            a, parent, it = stack[-1]
            advanced = False
            for b, _ in it:
                if b == parent:
                    continue
                if disc[b] == -1:
                    disc[b] = low[b] = t
                    t += 1
                    stack.append((b, a, iter(neighbors[b])))
                    advanced = True
                    break
                low[a] = min(low[a], disc[b])
            if advanced:
                continue
            stack.pop()
            if parent != -1:
                low[parent] = min(low[parent], low[a])
                if low[a] > disc[parent]:
                    bridges.add((min(a, parent), max(a, parent)))
    all_bonds = {(min(a, b), max(a, b)) for a in range(n) for b, _ in neighbors[a]}
    return all_bonds - bridges


# ---------------------------------------------------------------------------
# SMILES parsing
# ---------------------------------------------------------------------------

def parse_smiles(text: str) -> MolGraph:
    """Parse a SMILES string from the supported subset into a `MolGraph`."""
    s = text.strip()
    if not s:
        raise UnsupportedToken("empty SMILES")
    elements: list[str] = []
    aromatic: list[bool] = []
    bonds: dict[tuple[int, int], float | None] = {}
    branch_stack: list[int] = []
    rings: dict[int, tuple[int, float | None]] = {}
    prev: int | None = None
    pending: float | None = None
    i = 0
    n = len(s)

    def add_bond(a, b, order):
        key = (min(a, b), max(a, b))
        if a == b or key in bonds:
            raise ValenceError(f"invalid bond between atoms {a} and {b}")
        bonds[key] = order

    while i < n:
        ch = s[i]
        if ch in "COFco":
            two = s[i:i + 2]
            if two in _FOREIGN_ELEMENTS:
                raise UnsupportedElement(f"element {two!r} at position {i}")
            idx = len(elements)
            elements.append(ch.upper())
            aromatic.append(ch.islower())
            if prev is not None:
                add_bond(prev, idx, pending)
            elif pending is not None:
                raise UnsupportedToken(f"bond symbol without preceding atom at {i}")
            prev = idx
            pending = None
            i += 1
        elif ch in _BOND_SYMBOL:
            if pending is not None:
                raise UnsupportedToken(f"consecutive bond symbols at {i}")
            pending = _BOND_SYMBOL[ch]
            i += 1
        elif ch == "(":
            if prev is None or pending is not None:
                raise UnbalancedParenthesis(f"branch opened without atom at {i}")
            branch_stack.append(prev)
            i += 1
        elif ch == ")":
            if not branch_stack:
                raise UnbalancedParenthesis(f"unmatched ')' at {i}")
            if pending is not None:
                raise UnsupportedToken(f"dangling bond before ')' at {i}")
            prev = branch_stack.pop()
            i += 1
        elif ch.isdigit() or ch == "%":
            if ch == "%":
                if len(s[i + 1:i + 3]) < 2 or not s[i + 1:i + 3].isdigit():
                    raise UnsupportedToken(f"bad ring label at {i}")
                label = int(s[i + 1:i + 3])
                i += 3
            else:
                label = int(ch)
                i += 1
            if prev is None:
                raise UnsupportedToken(f"ring label before any atom at {i}")
            if label in rings:
                other, order0 = rings.pop(label)
                if order0 is not None and pending is not None and order0 != pending:
                    raise ValenceError(f"conflicting ring-closure bond orders for label {label}")
                add_bond(other, prev, pending if pending is not None else order0)
            else:
                rings[label] = (prev, pending)
            pending = None
        elif ch.isalpha():
            two = s[i:i + 2]
            if two in _FOREIGN_ELEMENTS or ch in _FOREIGN_ELEMENTS or ch.isupper():
                raise UnsupportedElement(f"element {two if two in _FOREIGN_ELEMENTS else ch!r} at position {i}")
            raise UnsupportedToken(f"unsupported token {ch!r} at position {i}")
        elif ch == "[":
            j = s.find("]", i)
            body = s[i + 1:j] if j != -1 else s[i + 1:]
            sym = ""
            for c in body:
                if c.isalpha():
                    sym += c
                elif sym:
                    break
            base = sym[:2] if sym[:2] in _FOREIGN_ELEMENTS else sym[:1]
            if base and base not in ("C", "O", "F", "c", "o", "H"):
                raise UnsupportedElement(f"element {base!r} in bracket atom")
            raise UnsupportedToken(f"bracket atom [{body}] (charges/isotopes/stereo unsupported)")
        else:
            raise UnsupportedToken(f"unsupported token {ch!r} at position {i}")

    if pending is not None:
        raise UnsupportedToken("dangling bond at end of SMILES")
    if branch_stack:
        raise UnbalancedParenthesis("unclosed '('")
    if rings:
        raise UnclosedRing(f"unclosed ring labels {sorted(rings)}")

    # Implicit bonds: aromatic between two aromatic atoms, single otherwise;
    # aromatic-looking links that turn out not to be ring bonds (biphenyl
    # style) are single.
    resolved = []
    implicit_arom = []
    for (a, b), order in bonds.items():
        if order is None:
            if aromatic[a] and aromatic[b]:
                implicit_arom.append((a, b))
                order = AROMATIC
            else:
                order = 1.0
        resolved.append((a, b, order))
    if implicit_arom:
        nbrs = [[] for _ in elements]
        for a, b, o in resolved:
            nbrs[a].append((b, o))
            nbrs[b].append((a, o))
        if _connected(nbrs):
            ring = _ring_bonds(nbrs)
            fix = {k for k in implicit_arom if k not in ring}
            resolved = [(a, b, 1.0 if (a, b) in fix else o) for a, b, o in resolved]
    return MolGraph(tuple(elements), tuple(aromatic), tuple(resolved))


def read_smiles_file(path) -> list[tuple[str, str]]:
    """Read ``(id, smiles)`` pairs from a SMILES line file.

    Blank lines and ``#`` comments are skipped.  A second whitespace token on
    a line is taken as the molecule id; otherwise ids are ``mol<lineno>``.
    """
    out = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            ident = parts[1] if len(parts) > 1 else f"mol{lineno}"
            out.append((ident, parts[0]))
    return out


def write_smiles_file(path, smiles: Iterable[str], ids: Sequence[str] | None = None) -> None:
    with open(path, "w") as fh:
        for k, smi in enumerate(smiles):
            if ids is None:
                fh.write(f"{smi}\n")
            else:
                fh.write(f"{smi} {ids[k]}\n")


# ---------------------------------------------------------------------------
# canonical SMILES output
# ---------------------------------------------------------------------------

def _dense_rank(keys):
    order = sorted(set(keys))
    lookup = {k: r for r, k in enumerate(order)}
    return [lookup[k] for k in keys]


def canonical_ranks(mol: MolGraph) -> list[int]:
    """Morgan-style atom ranking; remaining ties go to the lowest index."""
    n = len(mol)
    inv = []
    for a in range(n):
        inv.append((
            "CFO".index(mol.elements[a]),
            mol.aromatic[a],
            mol.degree(a),
            mol.hydrogens[a],
            mol.ring_member[a],
            tuple(sorted(o for _, o in mol.neighbors[a])),
        ))
    ranks = _dense_rank(inv)

    def refine(ranks):
        while True:
            keys = [
                (ranks[a], tuple(sorted((o, ranks[b]) for b, o in mol.neighbors[a])))
                for a in range(n)
            ]
            new = _dense_rank(keys)
            if len(set(new)) == len(set(ranks)):
                return new
            ranks = new

    ranks = refine(ranks)
    while len(set(ranks)) < n:
        counts = {}
        for r in ranks:
            counts[r] = counts.get(r, 0) + 1
        tied = min(r for r, c in counts.items() if c > 1)
        pick = min(a for a in range(n) if ranks[a] == tied)
        # pick takes the lower slot of its tie class
        ranks = [2 * r for r in ranks]
        ranks[pick] -= 1
        ranks = refine(_dense_rank(ranks))
    return ranks


def _bond_symbol(mol, a, b, order):
    if order == 2.0:
        return "="
    if order == 3.0:
        return "#"
    if order == AROMATIC:
        return ""
    if mol.aromatic[a] and mol.aromatic[b]:
        return "-"
    return ""


def to_smiles(mol: MolGraph) -> str:
    """Canonical SMILES for ``mol``; isomorphic graphs give identical strings."""
    n = len(mol)
    ranks = canonical_ranks(mol)
    start = min(range(n), key=lambda a: ranks[a])
    visited = [False] * n
    order: list[int] = []
    children: list[list[int]] = [[] for _ in range(n)]
    ring_edges: list[tuple[int, int]] = []
    seen_edges = set()

    def dfs(a, parent):
        visited[a] = True
        order.append(a)
        for b, _ in sorted(mol.neighbors[a], key=lambda t: ranks[t[0]]):
            if b == parent:
                continue
            key = (min(a, b), max(a, b))
            if visited[b]:
                if key not in seen_edges:
                    seen_edges.add(key)
                    ring_edges.append((b, a))  # b opened earlier, a closes
                continue
            seen_edges.add(key)
            children[a].append(b)
            dfs(b, a)

    dfs(start, -1)
    pos = {a: k for k, a in enumerate(order)}
    bond_order = {(i, j): o for i, j, o in mol.bonds}

    def border(a, b):
        return bond_order[(min(a, b), max(a, b))]

    openings: dict[int, list[int]] = {a: [] for a in range(n)}
    closings: dict[int, list[int]] = {a: [] for a in range(n)}
    for opener, closer in ring_edges:
        openings[opener].append(closer)
        closings[closer].append(opener)

    digit_of: dict[tuple[int, int], int] = {}
    free: list[int] = list(range(1, 100))
    parts: list[str] = []

    def label(d):
        return str(d) if d < 10 else f"%{d:02d}"

    def emit(a):
        el = mol.elements[a]
        parts.append(el.lower() if mol.aromatic[a] else el)
        for opener in sorted(closings[a], key=lambda x: pos[x]):
            d = digit_of.pop((opener, a))
            parts.append(label(d))
            free.append(d)
            free.sort()
        for closer in sorted(openings[a], key=lambda x: ranks[x]):
            d = free.pop(0)
            digit_of[(a, closer)] = d
            parts.append(_bond_symbol(mol, a, closer, border(a, closer)) + label(d))
        kids = children[a]
        for k, b in enumerate(kids):
            sym = _bond_symbol(mol, a, b, border(a, b))
            if k < len(kids) - 1:
                parts.append("(" + sym)
                emit(b)
                parts.append(")")
            else:
                parts.append(sym)
                emit(b)

    emit(start)
    return "".join(parts)


# ---------------------------------------------------------------------------
# composition and descriptors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Composition:
    counts: dict
    category: str


def element_counts(mol: MolGraph) -> dict:
    counts = {"C": 0, "H": mol.n_hydrogens, "O": 0, "F": 0}
    for el in mol.elements:
        counts[el] += 1
    return counts


def composition(mol: MolGraph) -> Composition:
    counts = element_counts(mol)
    present = {el for el, c in counts.items() if c > 0}
    names = {
        frozenset("CH"): "H/C",
        frozenset("CHO"): "H/C/O",
        frozenset("CHF"): "H/C/F",
        frozenset("CF"): "C/F",
        frozenset("CHOF"): "H/C/O/F",
    }
    return Composition(counts, names.get(frozenset(present), "other"))


def mol_weight(mol: MolGraph) -> float:
    counts = element_counts(mol)
    return float(sum(ATOMIC_WEIGHT[el] * c for el, c in counts.items()))


def formula(mol: MolGraph) -> str:
    counts = element_counts(mol)
    out = []
    for el in ("C", "H", "O", "F"):
        c = counts[el]
        if c:
            out.append(el if c == 1 else f"{el}{c}")
    return "".join(out)


def _longest_chain(mol: MolGraph) -> int:
    # topological diameter in atoms; exact for acyclic skeletons
    n = len(mol)
    best = 1
    for src in range(n):
        dist = {src: 0}
        frontier = [src]
        while frontier:
            nxt = []
            for a in frontier:
                for b, _ in mol.neighbors[a]:
                    if b not in dist:
                        dist[b] = dist[a] + 1
                        nxt.append(b)
            frontier = nxt
        best = max(best, max(dist.values()) + 1)
    return best


def static_descriptors(mol: MolGraph) -> np.ndarray:
    """Fixed-order descriptor vector, see `DESCRIPTOR_NAMES`."""
    counts = element_counts(mol)
    n_heavy = len(mol)
    n_rings = len(mol.bonds) - n_heavy + 1
    n_arom = sum(mol.aromatic)
    branching = sum(1 for a in range(n_heavy) if mol.degree(a) >= 3)
    hbd = sum(1 for a in range(n_heavy) if mol.elements[a] == "O" and mol.hydrogens[a] > 0)
    rot = sum(
        1
        for i, j, o in mol.bonds
        if o == 1.0 and (i, j) not in mol.ring_bonds and mol.degree(i) >= 2 and mol.degree(j) >= 2
    )
    return np.array(
        [
            mol_weight(mol),
            counts["C"],
            counts["H"],
            counts["O"],
            counts["F"],
            n_heavy,
            n_rings,
            n_arom,
            branching,
            _longest_chain(mol),
            hbd,
            rot,
        ],
        dtype=float,
    )


# ---------------------------------------------------------------------------
# fingerprints
# ---------------------------------------------------------------------------

FNV64_OFFSET = 0xCBF29CE484222325
FNV64_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def fnv1a_64(values: Iterable[int]) -> int:
    """FNV-1a over the 8-byte little-endian encoding of each integer."""
    h = FNV64_OFFSET
    for v in values:
        for byte in int(v & _MASK64).to_bytes(8, "little"):
            h ^= byte
            h = (h * FNV64_PRIME) & _MASK64
    return h


@dataclass(frozen=True, eq=False)
class Fingerprint:
    bits: np.ndarray
    nbits: int = 2048
    radius: int = 2

    def __post_init__(self):
        bits = np.asarray(self.bits, dtype=bool).copy()
        if bits.shape != (self.nbits,):
            raise InvalidWidth(f"bit array of shape {bits.shape} for nbits={self.nbits}")
        bits.setflags(write=False)
        object.__setattr__(self, "bits", bits)

    def __eq__(self, other):
        return (
            isinstance(other, Fingerprint)
            and self.nbits == other.nbits
            and self.radius == other.radius
            and bool(np.array_equal(self.bits, other.bits))
        )

    def __hash__(self):
        return hash((self.nbits, self.radius, self.bits.tobytes()))

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())

    def to_hex(self) -> str:
        return np.packbits(self.bits).tobytes().hex()

    @classmethod
    def from_hex(cls, text: str, nbits: int = 2048, radius: int = 2) -> "Fingerprint":
        raw = np.frombuffer(bytes.fromhex(text), dtype=np.uint8)
        return cls(np.unpackbits(raw)[:nbits].astype(bool), nbits, radius)

    @classmethod
    def from_string(cls, text: str, radius: int = 0) -> "Fingerprint":
        """Build from a ``'0101...'`` string (handy for small fixtures)."""
        bits = np.array([c == "1" for c in text], dtype=bool)
        return cls(bits, len(bits), radius)


def _bond_code(order):
    return 4 if order == AROMATIC else int(order)


def morgan_identifiers(mol: MolGraph, radius: int = 2) -> list[list[int]]:
    """Per-round atom identifiers (round 0 first)."""
    if radius < 0:
        raise ValueError("radius must be non-negative")
    n = len(mol)
    ids = [
        fnv1a_64((
            ATOMIC_NUMBER[mol.elements[a]],
            mol.degree(a),
            mol.hydrogens[a],
            int(mol.aromatic[a]),
            int(mol.ring_member[a]),
        ))
        for a in range(n)
    ]
    rounds = [ids]
    for _ in range(radius):
        prev = rounds[-1]
        nxt = []
        for a in range(n):
            env = sorted((_bond_code(o), prev[b]) for b, o in mol.neighbors[a])
            flat = [prev[a]]
            for code, ident in env:
                flat.extend((code, ident))
            nxt.append(fnv1a_64(flat))
        rounds.append(nxt)
    return rounds


def morgan_fingerprint(mol: MolGraph, radius: int = 2, nbits: int = 2048) -> Fingerprint:
    if nbits < 64 or nbits & (nbits - 1):
        raise InvalidWidth(f"nbits must be a power of two >= 64, got {nbits}")
    bits = np.zeros(nbits, dtype=bool)
    for ids in morgan_identifiers(mol, radius):
        for ident in ids:
            bits[ident % nbits] = True
    return Fingerprint(bits, nbits, radius)


def _counts(a: Fingerprint, b: Fingerprint):
    if a.nbits != b.nbits:
        raise WidthMismatch(f"{a.nbits} vs {b.nbits} bits")
    n11 = int(np.count_nonzero(a.bits & b.bits))
    n00 = int(np.count_nonzero(~a.bits & ~b.bits))
    mism = a.nbits - n11 - n00
    return n11, n00, mism


def rogers_tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    n11, n00, mism = _counts(a, b)
    return (n11 + n00) / (n11 + n00 + 2 * mism)


def tanimoto(a: Fingerprint, b: Fingerprint) -> float:
    n11, _, mism = _counts(a, b)
    denom = n11 + mism
    return 1.0 if denom == 0 else n11 / denom


METRICS = {"rogers_tanimoto": rogers_tanimoto, "tanimoto": tanimoto}


def similarity(a: Fingerprint, b: Fingerprint, metric: str = "rogers_tanimoto") -> float:
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}") from None
    return fn(a, b)


def distance(a: Fingerprint, b: Fingerprint, metric: str = "rogers_tanimoto") -> float:
    return 1.0 - similarity(a, b, metric)
