import networkx as nx
import pytest

from volscreen import chemgraph as cg


def to_nx(mol: cg.MolGraph) -> nx.Graph:
    g = nx.Graph()
    for a, atom in enumerate(mol.atoms):
        g.add_node(a, element=atom.element, aromatic=atom.aromatic, h=mol.hydrogens[a])
    for i, j, order in mol.bonds:
        g.add_edge(i, j, order=order)
    return g


def isomorphic(a: cg.MolGraph, b: cg.MolGraph) -> bool:
    nm = lambda x, y: x == y
    return nx.is_isomorphic(to_nx(a), to_nx(b), node_match=nm, edge_match=nm)


def permuted(mol: cg.MolGraph, perm) -> cg.MolGraph:
    """Same molecule with atom ``a`` renumbered to ``perm[a]``."""
    n = len(mol)
    elements = [None] * n
    aromatic = [None] * n
    for a in range(n):
        elements[perm[a]] = mol.elements[a]
        aromatic[perm[a]] = mol.aromatic[a]
    bonds = [(perm[i], perm[j], o) for i, j, o in mol.bonds]
    return cg.MolGraph(tuple(elements), tuple(aromatic), tuple(bonds))


SAMPLE_SMILES = [
    "C", "CC", "CCCCCC", "CC(C)C", "C1CCCC1", "C1CCCCC1", "c1ccccc1", "Cc1ccccc1",
    "c1ccc2ccccc2c1", "CC(=O)OC", "OCCO", "C#CC", "C=CC=C", "FC(F)(F)C(F)(F)F",
    "CC(C)(C)C1CCC(CC1)OC(=O)C", "c1ccoc1", "CCOC(=O)C(F)F", "C1CC2CCC1CC2",
]


@pytest.fixture(scope="session")
def generated_corpus():
    from volscreen import molgen
    mols = []
    for k in range(200):
        cfg = molgen.GrowthConfig(mw_max=150.0 + 2.0 * k, p_functional_group=0.3)
        mol, _ = molgen.generate(7, cfg, index=k)
        mols.append(mol)
    return mols
