import itertools

import pytest
from hypothesis import given, strategies as st

from rpr.calls import ResourceKind
from rpr.checkpoint import Session
from rpr.errors import DuplicateReal, UnknownVirtualId, UntranslatableRealId
from rpr.ids import TranslationTable, assign_virtual, rebind, to_real

K = ResourceKind


def test_first_texture_is_one():
    t = TranslationTable()
    assert assign_virtual(t, K.Texture, 1000) == 1


def test_counter_is_monotone_and_never_reuses():
    s = Session()
    s.record("CreateContext")
    assert [r.vid for r in s.record("GenTextures", 2)] == [1, 2]
    assert [r.vid for r in s.record("GenTextures", 2)] == [3, 4]
    s.record("DeleteTextures", 2)
    assert [r.vid for r in s.record("GenTextures", 1)] == [5]


def test_zero_is_reserved():
    t = TranslationTable()
    assert to_real(t, K.Texture, 0) == 0
    assert t.to_virtual(K.Buffer, 0) == 0


def test_assign_then_to_real():
    t = TranslationTable()
    v = t.assign_virtual(K.Buffer, 77)
    assert to_real(t, K.Buffer, v) == 77
    assert t.to_virtual(K.Buffer, 77) == v


def test_unknown_ids():
    t = TranslationTable()
    with pytest.raises(UnknownVirtualId):
        t.to_real(K.Texture, 9)
    with pytest.raises(UntranslatableRealId):
        t.to_virtual(K.Texture, 9)
    with pytest.raises(UnknownVirtualId):
        rebind(t, K.Texture, 7, 1)


def test_restart_rebind():
    t = TranslationTable()
    t.assign_virtual(K.Texture, 5)
    restarted = t.detached()
    assert restarted.is_pending(K.Texture, 1)
    rebind(restarted, K.Texture, 1, 42)
    assert restarted.to_real(K.Texture, 1) == 42
    restarted.check()


def test_duplicate_real_rejected():
    t = TranslationTable()
    t.assign_virtual(K.Texture, 5)
    with pytest.raises(DuplicateReal):
        t.assign_virtual(K.Texture, 5)


def test_rebind_all_preserves_bijection_exhaustive():
    # every permutation of fresh real ids over every small table
    for n in range(1, 5):
        base = TranslationTable()
        for r in range(n):
            base.assign_virtual(K.Texture, 100 + r)
        for perm in itertools.permutations(range(n)):
            t = base.copy()
            for vid, p in zip(range(1, n + 1), perm):
                t.rebind(K.Texture, vid, 500 + p)
            t.check()
            assert sorted(t.to_real(K.Texture, v) for v in range(1, n + 1)) == \
                [500 + i for i in range(n)]
            d = base.detached()
            for vid, p in zip(range(1, n + 1), perm):
                d.rebind(K.Texture, vid, 1 + p)
            d.check()


@given(st.lists(st.tuples(st.sampled_from(list(K)), st.integers(1, 50)), max_size=40))
def test_bijection_invariant(ops):
    t = TranslationTable()
    used = {k: set() for k in K}
    for kind, real in ops:
        if real in used[kind]:
            with pytest.raises(DuplicateReal):
                t.assign_virtual(kind, real)
        else:
            vid = t.assign_virtual(kind, real)
            used[kind].add(real)
            assert t.to_virtual(kind, real) == vid
        t.check()
    assert TranslationTable.from_triples(t.triples(), t.counters()) == t
