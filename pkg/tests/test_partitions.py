import itertools
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st
from sympy.utilities.iterables import multiset_partitions

from nnfock.partitions import (CLOSING, MIDDLE, OPENING, SINGLETON, Partition, PartitionSizeError,
                               catalan, enumerate_int, enumerate_nc, enumerate_nc_ns,
                               enumerate_nc_ns_connected, mobius_boolean_cumulants,
                               mobius_free_cumulants)
from nnfock.norms import r_sequence


def crossing(blocks):
    """Brute force: i < j < k < l with i ~ k, j ~ l in different blocks."""
    where = {x: b for b, blk in enumerate(blocks) for x in blk}
    n = len(where)
    for i, j, k, l in itertools.combinations(range(1, n + 1), 4):
        if where[i] == where[k] and where[j] == where[l] and where[i] != where[j]:
            return True
    return False


def all_partitions(n):
    return {Partition(n, tuple(tuple(b) for b in p)) for p in multiset_partitions(list(range(1, n + 1)))}


@pytest.mark.parametrize("n", range(1, 8))
def test_nc_matches_brute_force(n):
    brute = {p for p in all_partitions(n) if not crossing(p.blocks)}
    nc = enumerate_nc(n)
    assert len(nc) == len(set(nc)) == catalan(n)
    assert set(nc) == brute


@pytest.mark.parametrize("n", range(1, 8))
def test_interval_partitions(n):
    ints = enumerate_int(n)
    assert len(ints) == 2 ** (n - 1)
    assert set(ints) == {p for p in all_partitions(n) if p.is_interval}


def test_spec_examples():
    assert len(enumerate_nc(3)) == 5
    assert {repr(p) for p in enumerate_nc_ns(4)} == {"{12}{34}", "{14}{23}", "{1234}"}
    assert {repr(p) for p in enumerate_nc_ns_connected(5)} == {"{12345}", "{15}{234}", "{125}{34}",
                                                               "{145}{23}"}


@pytest.mark.parametrize("n", range(2, 12))
def test_connected_counts_follow_r_sequence(n):
    # |connected no-singleton NC(n)| = r_{n-2}, the sequence bounding the R' growth
    assert len(enumerate_nc_ns_connected(n)) == r_sequence(n - 2)[n - 2]
    assert r_sequence(n)[n] <= catalan(n)


@pytest.mark.parametrize("n", range(1, 8))
def test_roles_and_flags(n):
    for p in enumerate_nc(n):
        for b in p.blocks:
            roles = [p.roles[x - 1] for x in b]
            if len(b) == 1:
                assert roles == [SINGLETON]
            else:
                assert roles[0] == OPENING and roles[-1] == CLOSING
                assert all(r == MIDDLE for r in roles[1:-1])
        for flag, v in zip(p.inner_flags, p.blocks):
            assert flag == any(w[0] < v[0] and v[-1] < w[-1] for w in p.blocks if w != v)
    for p in enumerate_nc_ns(n):
        assert SINGLETON not in p.roles


def test_size_guard():
    with pytest.raises(PartitionSizeError):
        enumerate_nc(15)


def test_invalid_partition():
    with pytest.raises(ValueError):
        Partition(3, ((1, 2),))


def sc_moments(t, lam):
    # centered moments of SC(t, lam): m_n = sum over NC_ns(n) of weights
    table = {0: 1, 1: 0, 2: 1, 3: lam, 4: 2 + t + lam ** 2}
    return lambda w: table[len(w)]


def test_mobius_scalar_examples():
    mom = sc_moments(F(1, 3), F(2, 5))
    assert mobius_free_cumulants(mom, (0,)) == 0
    assert mobius_free_cumulants(mom, (0, 0)) == 1
    poisson = {0: 1, 1: 0, 2: 1, 3: 1, 4: 3}
    assert mobius_free_cumulants(lambda w: poisson[len(w)], (0,) * 4) == 1


@given(st.lists(st.fractions(min_value=-3, max_value=3, max_denominator=5), min_size=6, max_size=6))
@settings(max_examples=30, deadline=None)
def test_mobius_inverts_moment_cumulant_sum(cums):
    """Cumulants -> moments by summing over the lattice, then Mobius back."""
    kappa = {n + 1: c for n, c in enumerate(cums)}
    for lattice, inverse in ((enumerate_nc, mobius_free_cumulants),
                             (enumerate_int, mobius_boolean_cumulants)):
        moments = {0: 1}
        for n in range(1, 7):
            total = 0
            for p in lattice(n):
                term = 1
                for b in p.blocks:
                    term *= kappa[len(b)]
                total += term
            moments[n] = total
        cache = {}
        for n in range(1, 7):
            assert inverse(lambda w: moments[len(w)], (0,) * n, cache) == kappa[n]
