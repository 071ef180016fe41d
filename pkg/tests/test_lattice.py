import random

import pytest

from remat.graph import is_lower_set
from remat.lattice import LatticeTooLargeError, all_lower_sets, pruned_lower_sets

from conftest import brute_force_lower_sets, build_graph, chain_graph, mask_for, random_graph


def test_chain_lower_sets_are_prefixes(chain3):
    fam = all_lower_sets(chain3)
    assert list(fam.masks) == [0b000, 0b001, 0b011, 0b111]


def test_diamond_lattice_matches_brute_force(diamond):
    fam = all_lower_sets(diamond)
    assert len(fam) == 6
    assert set(fam.masks) == brute_force_lower_sets(diamond)


def test_isolated_nodes_give_full_powerset():
    g = build_graph([(f"i{k}", "other", 1, 1) for k in range(3)], [])
    assert len(all_lower_sets(g)) == 8


def test_pruned_family_diamond(diamond):
    fam = pruned_lower_sets(diamond)
    expected = {
        0,
        mask_for(diamond, ["a"]),
        mask_for(diamond, ["a", "b"]),
        mask_for(diamond, ["a", "c"]),
        diamond.full_mask,
    }
    assert set(fam.masks) == expected


def test_pruned_family_parallel_chains():
    g = build_graph(
        [(x, "other", 1, 1) for x in "abcd"],
        [("a", "b"), ("c", "d")],
    )
    fam = pruned_lower_sets(g)
    expected = {
        0,
        mask_for(g, ["a"]),
        mask_for(g, ["a", "b"]),
        mask_for(g, ["c"]),
        mask_for(g, ["c", "d"]),
        g.full_mask,  # appended: no single closure covers both sinks
    }
    assert set(fam.masks) == expected


def test_chain_families_coincide():
    for n in (1, 4, 7):
        g = chain_graph(n)
        assert set(all_lower_sets(g).masks) == set(pruned_lower_sets(g).masks)


def test_cap_exceeded_names_the_cap():
    g = build_graph([(f"i{k}", "other", 1, 1) for k in range(5)], [])
    with pytest.raises(LatticeTooLargeError, match="more than 6 lower sets"):
        all_lower_sets(g, cap=6)


def test_cap_below_minimum_rejected(chain3):
    with pytest.raises(ValueError, match="cap must be at least"):
        all_lower_sets(chain3, cap=3)


def test_family_properties_on_random_graphs():
    rng = random.Random(21)
    for _ in range(25):
        g = random_graph(rng, rng.randint(1, 8), rng.random())
        full = all_lower_sets(g)
        pruned = pruned_lower_sets(g)
        # bounds, membership, and containment
        assert g.n + 1 <= len(full) <= 2 ** g.n
        assert len(pruned) <= g.n + 2
        assert set(pruned.masks) <= set(full.masks)
        assert 0 in full and g.full_mask in full
        assert 0 in pruned and g.full_mask in pruned
        for mask in full:
            assert is_lower_set(g, mask)
        # size-sorted order: strict subsets precede supersets
        for i, lo in enumerate(full.masks):
            for hi in full.masks[i + 1 :]:
                assert not (hi & ~lo == 0 and hi != lo)
