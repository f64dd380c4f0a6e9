"""Grow candidate molecules and pass them through the two vapor-pressure cuts.

The predictor is a stub that maps molecular weight to log10 Pa, so the
example runs in a few seconds without training anything.
"""
import numpy as np

from volscreen import chemgraph as cg
from volscreen import molgen
from volscreen import screen as sc


class WeightRule:
    """Heavier is less volatile; linear in MW and 1/T, for illustration only."""
    name = "weight-rule"

    def features(self, mol, temperature):
        return np.array([cg.mol_weight(mol), temperature])

    def predict(self, rows):
        rows = np.atleast_2d(rows)
        mean = 6.0 - 0.03 * rows[:, 0] * (387.0 / rows[:, 1]) ** 0.5
        return mean, np.full(len(rows), 0.1)


cfg = molgen.GrowthConfig.preset("fg_on", mw_max=300.0)
mols, traces = molgen.generate_many(200, seed=3, config=cfg)
mw = np.array([cg.mol_weight(m) for m in mols])
print(f"{len(mols)} molecules, MW {mw.min():.0f}..{mw.max():.0f}")
print("categories:", sorted({cg.composition(m).category for m in mols}))

# a trace replays to the same structure without touching the RNG
assert cg.to_smiles(molgen.replay(traces[0])) == traces[0].smiles

report = sc.screen(mols, WeightRule())
print("counts:", report.counts())
for r in report.rows[:8]:
    v300 = "" if r.log10vp_300K is None else f"{r.log10vp_300K:7.2f}"
    print(f"  {r.verdict:12s} {r.log10vp_387K:7.2f} {v300:>7s}  {r.smiles}")
