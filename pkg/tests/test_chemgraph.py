import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from volscreen import chemgraph as cg
from volscreen.errors import (
    InvalidWidth, UnbalancedParenthesis, UnclosedRing, UnsupportedToken, ValenceError, WidthMismatch,
)

from conftest import SAMPLE_SMILES, isomorphic, permuted

W = cg.ATOMIC_WEIGHT


def desc(mol, name):
    return cg.static_descriptors(mol)[cg.DESCRIPTOR_NAMES.index(name)]


# -- parsing ----------------------------------------------------------------

def test_cyclopentane_ring_and_hydrogens():
    m = cg.parse_smiles("C1CCCC1")
    assert len(m) == 5 and m.n_hydrogens == 10
    assert all(m.ring_member)


def test_hexane_chain():
    m = cg.parse_smiles("CCCCCC")
    assert len(m) == 6 and len(m.bonds) == 5
    assert cg.composition(m).category == "H/C"


def test_methyl_acetate():
    m = cg.parse_smiles("CC(=O)OC")
    counts = cg.element_counts(m)
    assert counts["O"] == 2
    assert sum(1 for *_, o in m.bonds if o == 2.0) == 1
    hand = 3 * 12.011 + 6 * 1.008 + 2 * 15.999
    assert cg.mol_weight(m) == pytest.approx(hand, abs=1e-9)
    assert round(cg.mol_weight(m), 2) == 74.08


@pytest.mark.parametrize("text,exc", [
    ("CN", UnsupportedToken),
    ("C[13C]", UnsupportedToken),
    ("C/C=C/C", UnsupportedToken),
    ("Cl", UnsupportedToken),
    ("C(C)(C)(C)(C)C", ValenceError),
    ("O=O=O", ValenceError),
    ("FF", None),
    ("C1CCC", UnclosedRing),
    ("C(CC", UnbalancedParenthesis),
    ("CC)C", UnbalancedParenthesis),
])
def test_parse_errors(text, exc):
    if exc is None:
        assert len(cg.parse_smiles(text)) == 2
    else:
        with pytest.raises(exc):
            cg.parse_smiles(text)


def test_aromatic_atom_outside_ring_rejected():
    with pytest.raises(ValenceError):
        cg.parse_smiles("cC")


def test_valence_is_filled_exactly():
    for s in SAMPLE_SMILES:
        m = cg.parse_smiles(s)
        for a in range(len(m)):
            used = sum(1.0 if o == cg.AROMATIC else o for _, o in m.neighbors[a])
            if m.aromatic[a] and m.elements[a] == "C":
                used += 1.0
            assert used + m.hydrogens[a] == cg.VALENCE[m.elements[a]]
            assert m.hydrogens[a] >= 0


# -- writing ----------------------------------------------------------------

def test_single_carbon():
    assert cg.to_smiles(cg.parse_smiles("C")) == "C"


@pytest.mark.parametrize("s", SAMPLE_SMILES)
def test_round_trip_isomorphic(s):
    m = cg.parse_smiles(s)
    back = cg.parse_smiles(cg.to_smiles(m))
    assert isomorphic(m, back)
    assert cg.to_smiles(back) == cg.to_smiles(m)


def test_round_trip_generated_corpus(generated_corpus):
    assert len(generated_corpus) == 200
    for m in generated_corpus:
        back = cg.parse_smiles(cg.to_smiles(m))
        assert isomorphic(m, back)


def test_hexane_orderings_give_same_string():
    a = cg.parse_smiles("CCCCCC")
    b = cg.parse_smiles("C(CC)CCC")
    c = permuted(a, [3, 1, 5, 0, 2, 4])
    assert cg.to_smiles(a) == cg.to_smiles(b) == cg.to_smiles(c)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(SAMPLE_SMILES), st.randoms(use_true_random=False))
def test_canonical_string_invariant_under_permutation(s, rnd):
    m = cg.parse_smiles(s)
    perm = list(range(len(m)))
    rnd.shuffle(perm)
    p = permuted(m, perm)
    assert isomorphic(m, p)
    assert cg.to_smiles(p) == cg.to_smiles(m)


# -- composition / descriptors ----------------------------------------------

def test_weights():
    assert cg.mol_weight(cg.parse_smiles("C")) == pytest.approx(12.011 + 4 * 1.008)
    assert cg.mol_weight(cg.parse_smiles("CCCCCC")) == pytest.approx(6 * 12.011 + 14 * 1.008)
    assert round(cg.mol_weight(cg.parse_smiles("CCCCCC")), 3) == 86.178


def test_perfluorohexane_weight_by_hand_sum():
    m = cg.parse_smiles("FC(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)F")
    assert cg.formula(m) == "C6F14"
    # 6 x 12.011 + 14 x 18.998
    assert cg.mol_weight(m) == pytest.approx(338.038, abs=1e-9)


@pytest.mark.parametrize("s,cat", [
    ("CCCCCC", "H/C"),
    ("CC(=O)OC", "H/C/O"),
    ("FC(F)(F)C(F)(F)F", "C/F"),
    ("CC(F)CC", "H/C/F"),
    ("OCC(F)C", "H/C/O/F"),
    ("O=C=O", "other"),
    ("FOF", "other"),
])
def test_categories(s, cat):
    assert cg.composition(cg.parse_smiles(s)).category == cat


def test_hexane_descriptors():
    m = cg.parse_smiles("CCCCCC")
    assert desc(m, "mol_weight") == pytest.approx(86.178, abs=5e-4)
    assert desc(m, "n_rings") == 0
    assert desc(m, "branching_index") == 0
    assert desc(m, "longest_chain") == 6
    assert desc(m, "n_rotatable") == 3


def test_ring_descriptors():
    cp = cg.parse_smiles("C1CCCC1")
    assert desc(cp, "n_rings") == 1 and desc(cp, "n_aromatic") == 0
    tol = cg.parse_smiles("Cc1ccccc1")
    assert desc(tol, "n_aromatic") == 6 and desc(tol, "n_rings") == 1
    assert desc(tol, "branching_index") == 1


def test_hbd_counts_hydroxyl_only():
    assert desc(cg.parse_smiles("OCCO"), "n_hbd") == 2
    assert desc(cg.parse_smiles("CC(=O)OC"), "n_hbd") == 0
    assert desc(cg.parse_smiles("CC(=O)O"), "n_hbd") == 1


def test_descriptors_deterministic_and_permutation_free():
    m = cg.parse_smiles("CC(C)(C)C1CCC(CC1)OC(=O)C")
    p = permuted(m, list(reversed(range(len(m)))))
    np.testing.assert_array_equal(cg.static_descriptors(m), cg.static_descriptors(p))
    assert len(cg.DESCRIPTOR_NAMES) == len(cg.static_descriptors(m))


# -- fingerprints -----------------------------------------------------------

def test_radius_zero_hexane_environments():
    m = cg.parse_smiles("CCCCCC")
    envs = {(m.elements[a], m.degree(a), m.hydrogens[a]) for a in range(len(m))}
    assert len(envs) == 2
    fp = cg.morgan_fingerprint(m, radius=0)
    assert 1 <= fp.popcount <= 2


def test_fingerprint_determinism():
    m = cg.parse_smiles("Cc1ccccc1")
    a = cg.morgan_fingerprint(m)
    b = cg.morgan_fingerprint(cg.parse_smiles("c1ccccc1C"))
    assert a == b and a.popcount >= 1


def test_fnv_constants_pinned():
    # FNV-1a of the empty input is the offset basis
    assert cg.fnv1a_64([]) == 0xCBF29CE484222325
    assert cg.fnv1a_64([0]) == cg.fnv1a_64([0])
    assert cg.fnv1a_64([1]) != cg.fnv1a_64([2])


def test_hexane_vs_perfluorohexane_share_no_atom_identifiers():
    h = cg.parse_smiles("CCCCCC")
    f = cg.parse_smiles("FC(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)C(F)(F)F")
    ids_h = {i for r in cg.morgan_identifiers(h, 1) for i in r}
    ids_f = {i for r in cg.morgan_identifiers(f, 1) for i in r}
    assert not ids_h & ids_f
    a, b = cg.morgan_fingerprint(h, 1), cg.morgan_fingerprint(f, 1)
    assert np.count_nonzero(a.bits & b.bits) <= 1


@pytest.mark.parametrize("nbits", [0, 32, 100, 1000])
def test_invalid_width(nbits):
    with pytest.raises(InvalidWidth):
        cg.morgan_fingerprint(cg.parse_smiles("CC"), nbits=nbits)


def test_hex_round_trip():
    fp = cg.morgan_fingerprint(cg.parse_smiles("CC(=O)OC"), nbits=256)
    assert cg.Fingerprint.from_hex(fp.to_hex(), 256, 2) == fp


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(SAMPLE_SMILES), st.randoms(use_true_random=False))
def test_fingerprint_permutation_invariant(s, rnd):
    m = cg.parse_smiles(s)
    perm = list(range(len(m)))
    rnd.shuffle(perm)
    assert cg.morgan_fingerprint(permuted(m, perm)) == cg.morgan_fingerprint(m)


# -- similarity -------------------------------------------------------------

def test_rogers_tanimoto_hand_counts():
    a = cg.Fingerprint.from_string("1100")
    b = cg.Fingerprint.from_string("1010")
    assert cg.rogers_tanimoto(a, b) == pytest.approx(1 / 3)
    assert cg.tanimoto(a, b) == pytest.approx(1 / 3)
    assert cg.distance(a, b) == pytest.approx(2 / 3)


def test_identity_and_complement():
    a = cg.Fingerprint.from_string("10110010")
    c = cg.Fingerprint.from_string("01001101")
    assert cg.rogers_tanimoto(a, a) == 1.0 and cg.distance(a, a) == 0.0
    assert cg.rogers_tanimoto(a, c) == 0.0


def test_width_mismatch():
    with pytest.raises(WidthMismatch):
        cg.rogers_tanimoto(cg.Fingerprint.from_string("1100"), cg.Fingerprint.from_string("11000"))


def test_unknown_metric():
    a = cg.Fingerprint.from_string("1100")
    with pytest.raises(ValueError):
        cg.similarity(a, a, "cosine")


def test_rogers_tanimoto_is_width_sensitive():
    # padding with shared zeros raises RT but leaves Jaccard alone
    a, b = cg.Fingerprint.from_string("1100"), cg.Fingerprint.from_string("1010")
    a2, b2 = cg.Fingerprint.from_string("1100" + "0" * 60), cg.Fingerprint.from_string("1010" + "0" * 60)
    assert cg.tanimoto(a, b) == cg.tanimoto(a2, b2)
    assert cg.rogers_tanimoto(a2, b2) > cg.rogers_tanimoto(a, b)


bitstrings = st.integers(4, 96).flatmap(
    lambda n: st.tuples(st.lists(st.booleans(), min_size=n, max_size=n),
                        st.lists(st.booleans(), min_size=n, max_size=n)))


@given(bitstrings, st.sampled_from(sorted(cg.METRICS)))
def test_similarity_symmetric_bounded(pair, metric):
    a = cg.Fingerprint(np.array(pair[0]), len(pair[0]), 0)
    b = cg.Fingerprint(np.array(pair[1]), len(pair[1]), 0)
    s = cg.similarity(a, b, metric)
    assert 0.0 <= s <= 1.0
    assert s == cg.similarity(b, a, metric)
    assert cg.similarity(a, a, metric) == 1.0


def test_smiles_file_round_trip(tmp_path):
    p = tmp_path / "mols.smi"
    cg.write_smiles_file(p, ["CCO", "C1CCCC1"], ids=["a", "b"])
    text = p.read_text()
    p.write_text("# header comment\n" + text)
    rows = cg.read_smiles_file(p)
    assert rows == [("a", "CCO"), ("b", "C1CCCC1")]
