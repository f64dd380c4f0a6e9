"""Seeded fragment-growth generator for candidate lubricant molecules.

A molecule starts from an alkyl chain or a cyclic fragment and then grows by
replacing one implicit hydrogen at a time with a chain, a ring or a
functional group until it is heavier than ``mw_max`` or has more than
``atom_max`` atoms.  Every molecule gets its own counter-based RNG stream
keyed by ``(seed, index)``, so results do not depend on generation order.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Iterable

import numpy as np

from . import chemgraph as cg
from .errors import NoHydrogenAtSite

# name -> (SMILES, attachment atoms or None for "any ring atom carrying H")
CYCLIC_FRAGMENTS = {
    "cyclohexane": ("C1CCCCC1", None),
    "cyclopentane": ("C1CCCC1", None),
    "benzene": ("c1ccccc1", None),
    "toluene": ("Cc1ccccc1", None),
    "naphthalene": ("c1ccc2ccccc2c1", None),
}

# functional groups are stored as small parent molecules; the listed atom
# loses one hydrogen when the group is attached
FUNCTIONAL_GROUPS = {
    "carboxylic_acid": ("C(=O)O", (0,)),  # formic acid, carbonyl carbon
    "methyl_ester": ("C(=O)OC", (0,)),  # methyl formate, carbonyl carbon
    "methyl_ketone": ("CC=O", (1,)),  # acetaldehyde, carbonyl carbon
    "hydroxyl": ("O", (0,)),  # water
}

ACTIONS = ("seed", "chain", "cyclic", "fg")


@dataclass(frozen=True)
class GrowthConfig:
    p_cyclic: float = 0.05
    p_functional_group: float = 0.0
    chain_mean: float = 7.0
    chain_sd: float = 3.0
    chain_min: int = 3
    chain_max: int = 12
    mw_max: float = 600.0
    atom_max: int = 200
    count_hydrogens: bool = True
    seed_cyclic_probability: float = 0.5
    cyclic_fragments: tuple = tuple(CYCLIC_FRAGMENTS)
    functional_groups: tuple = tuple(FUNCTIONAL_GROUPS)

    def __post_init__(self):
        for name in ("p_cyclic", "p_functional_group", "seed_cyclic_probability"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name}={v} outside [0, 1]")
        if self.p_cyclic + self.p_functional_group > 1.0:
            raise ValueError("p_cyclic + p_functional_group exceeds 1")
        if not self.cyclic_fragments or not self.functional_groups:
            raise ValueError("fragment sets must be non-empty")
        for f in self.cyclic_fragments:
            if f not in CYCLIC_FRAGMENTS:
                raise ValueError(f"unknown cyclic fragment {f!r}")
        for f in self.functional_groups:
            if f not in FUNCTIONAL_GROUPS:
                raise ValueError(f"unknown functional group {f!r}")
        if not 1 <= self.chain_min <= self.chain_max:
            raise ValueError("bad chain length bounds")
        if self.chain_sd < 0:
            raise ValueError("chain_sd must be non-negative")

    @classmethod
    def preset(cls, name: str, **overrides) -> "GrowthConfig":
        p_fg = {"fg_off": 0.0, "fg_on": 0.02}[name]
        return cls(p_functional_group=p_fg, **overrides)

    @classmethod
    def from_mapping(cls, mapping) -> "GrowthConfig":
        """Build from string values such as an INI ``[generator]`` section."""
        kw = {}
        mapping = dict(mapping)
        if "preset" in mapping:
            kw["p_functional_group"] = {"fg_off": 0.0, "fg_on": 0.02}[mapping.pop("preset")]
        types = {f.name: f.type for f in fields(cls)}
        for key, raw in mapping.items():
            if key not in types:
                raise ValueError(f"unknown generator option {key!r}")
            default = getattr(cls, key)
            if isinstance(default, tuple):
                kw[key] = tuple(s.strip() for s in str(raw).split(",") if s.strip())
            elif isinstance(default, bool):
                kw[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
            elif isinstance(default, int):
                kw[key] = int(raw)
            else:
                kw[key] = float(raw)
        return cls(**kw)


def sample_chain_length(rng, config: GrowthConfig = GrowthConfig()) -> int:
    """Rounded Gaussian draw, redrawn until inside the bounds (clamped after 100 tries)."""
    v = config.chain_mean
    for _ in range(100):
        v = math.floor(rng.normal(config.chain_mean, config.chain_sd) + 0.5)
        if config.chain_min <= v <= config.chain_max:
            return int(v)
    return int(min(max(v, config.chain_min), config.chain_max))


# ---------------------------------------------------------------------------
# fragments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Fragment:
    name: str
    mol: cg.MolGraph
    sites: tuple  # candidate attachment atoms


@lru_cache(maxsize=None)
def fragment(name: str) -> Fragment:
    """Look up ``chain:<n>``, a cyclic fragment or a functional group by name."""
    if name.startswith("chain:"):
        n = int(name.split(":", 1)[1])
        return Fragment(name, cg.parse_smiles("C" * n), (0,))
    if name in CYCLIC_FRAGMENTS:
        smi, sites = CYCLIC_FRAGMENTS[name]
    elif name in FUNCTIONAL_GROUPS:
        smi, sites = FUNCTIONAL_GROUPS[name]
    else:
        raise KeyError(name)
    mol = cg.parse_smiles(smi)
    if sites is None:
        sites = tuple(a for a in range(len(mol)) if mol.ring_member[a] and mol.hydrogens[a] > 0)
    return Fragment(name, mol, tuple(sites))


def attach_fragment(mol: cg.MolGraph, site_atom: int, frag: cg.MolGraph, attach_atom: int = 0) -> cg.MolGraph:
    """Join ``frag`` to ``mol`` by a single bond between two hydrogen-bearing atoms."""
    if not 0 <= site_atom < len(mol) or mol.hydrogens[site_atom] < 1:
        raise NoHydrogenAtSite(f"atom {site_atom} of the molecule carries no hydrogen")
    if not 0 <= attach_atom < len(frag) or frag.hydrogens[attach_atom] < 1:
        raise NoHydrogenAtSite(f"atom {attach_atom} of the fragment carries no hydrogen")
    off = len(mol)
    bonds = list(mol.bonds) + [(i + off, j + off, o) for i, j, o in frag.bonds]
    bonds.append((site_atom, attach_atom + off, 1.0))
    return cg.MolGraph(mol.elements + frag.elements, mol.aromatic + frag.aromatic, tuple(bonds))


class _Builder:
    """Mutable growth state; validated as a MolGraph only at the end."""

    def __init__(self):
        self.elements: list = []
        self.aromatic: list = []
        self.bonds: list = []
        self.hydrogens: list = []
        self.weight = 0.0

    def add(self, frag: Fragment, attach: int | None = None, site: int | None = None) -> None:
        off = len(self.elements)
        m = frag.mol
        self.elements.extend(m.elements)
        self.aromatic.extend(m.aromatic)
        self.hydrogens.extend(m.hydrogens)
        self.bonds.extend((i + off, j + off, o) for i, j, o in m.bonds)
        self.weight += cg.mol_weight(m)
        if site is not None:
            if self.hydrogens[site] < 1:
                raise NoHydrogenAtSite(f"atom {site} carries no hydrogen")
            a = attach + off
            if self.hydrogens[a] < 1:
                raise NoHydrogenAtSite(f"fragment atom {attach} carries no hydrogen")
            self.bonds.append((site, a, 1.0))
            self.hydrogens[site] -= 1
            self.hydrogens[a] -= 1
            self.weight -= 2 * cg.ATOMIC_WEIGHT["H"]

    def atom_count(self, with_h: bool) -> int:
        return len(self.elements) + (sum(self.hydrogens) if with_h else 0)

    def graph(self) -> cg.MolGraph:
        mol = cg.MolGraph(tuple(self.elements), tuple(self.aromatic), tuple(self.bonds))
        if list(mol.hydrogens) != self.hydrogens:
            raise AssertionError("hydrogen bookkeeping diverged from the validated graph")
        return mol


@dataclass
class GrowthStep:
    step: int
    action: str
    site: int | None
    fragment: str
    attach: int
    draws: list = field(default_factory=list)


@dataclass
class GrowthTrace:
    seed: int
    index: int
    steps: list = field(default_factory=list)
    smiles: str = ""

    def to_json(self) -> str:
        d = asdict(self)
        return json.dumps(d, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "GrowthTrace":
        d = json.loads(text)
        d["steps"] = [GrowthStep(**s) for s in d["steps"]]
        return cls(**d)


class _Recorder:
    """Thin wrapper that logs every draw made for the current step."""

    def __init__(self, rng):
        self.rng = rng
        self.log: list = []

    def random(self) -> float:
        v = float(self.rng.random())
        self.log.append(v)
        return v

    def normal(self, mu, sd) -> float:
        v = float(self.rng.normal(mu, sd))
        self.log.append(v)
        return v

    def take(self) -> list:
        out, self.log = self.log, []
        return out


def molecule_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(index)])))


def _pick(u: float, weights) -> int:
    cum = np.cumsum(weights, dtype=float)
    k = int(np.searchsorted(cum, u * cum[-1], side="right"))
    return min(k, len(cum) - 1)


def _choose_fragment(rec: _Recorder, kind: str, config: GrowthConfig) -> tuple[Fragment, int]:
    if kind == "chain":
        frag = fragment(f"chain:{sample_chain_length(rec, config)}")
    else:
        pool = config.cyclic_fragments if kind == "cyclic" else config.functional_groups
        frag = fragment(pool[_pick(rec.random(), [1.0] * len(pool))])
    attach = frag.sites[_pick(rec.random(), [1.0] * len(frag.sites))] if len(frag.sites) > 1 else frag.sites[0]
    return frag, attach


def _done(b: _Builder, config: GrowthConfig) -> bool:
    return b.weight > config.mw_max or b.atom_count(config.count_hydrogens) > config.atom_max


def generate(seed: int, config: GrowthConfig = GrowthConfig(), index: int = 0, max_steps: int = 10_000):
    """Grow one molecule.  Returns ``(MolGraph, GrowthTrace)``."""
    rec = _Recorder(molecule_rng(seed, index))
    trace = GrowthTrace(int(seed), int(index))
    b = _Builder()

    kind = "cyclic" if rec.random() < config.seed_cyclic_probability else "chain"
    frag, _ = _choose_fragment(rec, kind, config)
    b.add(frag)
    trace.steps.append(GrowthStep(0, "seed", None, frag.name, -1, rec.take()))

    step = 1
    while not _done(b, config):
        if step > max_steps:
            raise RuntimeError("growth did not reach the stop bound")
        site = _pick(rec.random(), b.hydrogens)
        if b.hydrogens[site] < 1:  # cannot happen with H weights; kept as a guard
            rec.take()
            continue
        u = rec.random()
        if u < config.p_cyclic:
            kind = "cyclic"
        elif u < config.p_cyclic + config.p_functional_group:
            kind = "fg"
        else:
            kind = "chain"
        frag, attach = _choose_fragment(rec, kind, config)
        b.add(frag, attach, site)
        trace.steps.append(GrowthStep(step, kind, site, frag.name, attach, rec.take()))
        step += 1

    mol = b.graph()
    trace.smiles = cg.to_smiles(mol)
    return mol, trace


def replay(trace: GrowthTrace) -> cg.MolGraph:
    """Rebuild a molecule from its recorded actions (no RNG involved)."""
    b = _Builder()
    for s in trace.steps:
        frag = fragment(s.fragment)
        if s.action == "seed":
            b.add(frag)
        else:
            b.add(frag, s.attach, s.site)
    return b.graph()


def generate_many(n: int, seed: int, config: GrowthConfig = GrowthConfig()):
    """``n`` molecules with per-index RNG streams.  Returns ``(mols, traces)``."""
    mols, traces = [], []
    for i in range(n):
        m, t = generate(seed, config, index=i)
        mols.append(m)
        traces.append(t)
    return mols, traces


def write_generated(smiles_path, trace_path, traces: Iterable[GrowthTrace], prefix: str = "gen") -> None:
    traces = list(traces)
    cg.write_smiles_file(smiles_path, [t.smiles for t in traces],
                         [f"{prefix}{t.index:06d}" for t in traces])
    with open(trace_path, "w") as fh:
        for t in traces:
            fh.write(t.to_json() + "\n")


def read_traces(path) -> list[GrowthTrace]:
    with open(path) as fh:
        return [GrowthTrace.from_json(line) for line in fh if line.strip()]


def max_fragment_weight(config: GrowthConfig = GrowthConfig()) -> float:
    """Largest weight one growth step can add (fragment mass minus two hydrogens)."""
    names = [f"chain:{config.chain_max}", *config.cyclic_fragments]
    if config.p_functional_group > 0:
        names += list(config.functional_groups)
    return max(cg.mol_weight(fragment(n).mol) for n in names) - 2 * cg.ATOMIC_WEIGHT["H"]
