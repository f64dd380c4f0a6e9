"""Embed generated molecules with t-SNE on fingerprint distances and cluster them.

Small and large alkyl-aromatic families are mixed so the map has structure.
Writes embedding.csv and embedding.svg to the working directory.
"""
import numpy as np

from volscreen import chemgraph as cg
from volscreen import chemspace as cs
from volscreen import cli
from volscreen import molgen

pure = molgen.GrowthConfig(p_cyclic=0.0, seed_cyclic_probability=0.0, mw_max=300.0)
ringy = molgen.GrowthConfig(p_cyclic=0.3, seed_cyclic_probability=1.0, mw_max=300.0)
_, t1 = molgen.generate_many(80, seed=1, config=pure)
_, t2 = molgen.generate_many(80, seed=2, config=ringy)
smiles = sorted({t.smiles for t in t1 + t2})
mols = [cg.parse_smiles(s) for s in smiles]
fps = [cg.morgan_fingerprint(m) for m in mols]
# any per-molecule value works for the cluster statistics; weight stands in here
values = np.array([-0.03 * cg.mol_weight(m) for m in mols])

# the automatic eps (90th percentile of 10-NN distances) merges everything at
# this size; a tighter radius separates the families
res = cs.analyze(fps, values, perplexity=15, iters=750, min_pts=5)
print(f"{len(mols)} unique molecules, auto eps {res.eps:.2f} -> {res.n_clusters} cluster(s)")
res = cs.analyze(fps, values, perplexity=15, iters=750, min_pts=5, eps=3.0)
print(f"eps {res.eps:.2f} -> {res.n_clusters} clusters, noise {int(np.sum(res.labels < 0))}")
for lab, idx in sorted(res.medoids.items()):
    s = res.stats[lab]
    print(f"  cluster {lab}: size {s['size']:3d}  median {s['median']:6.2f}  medoid {smiles[idx]}")

ids = [f"m{k:03d}" for k in range(len(mols))]
cs.write_embedding("embedding.csv", ids, res.coords, res.labels)
cli.emit_svg_scatter(res.coords, res.labels, sorted(res.medoids.values()), "embedding.svg")
print("wrote embedding.csv, embedding.svg")
