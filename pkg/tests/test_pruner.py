from hypothesis import given, strategies as st

from rpr.calls import FunctionId, IdRef, ResourceKind, TARGET_ADDRESSED
from rpr.checkpoint import Session
from rpr.driver import Replay
from rpr.pruner import compute_live_set, find_last_root, prune, resolve_selectors, size_bound
from rpr.tracelog import TraceLog
from rpr.workload import WorkloadProfile, random_log, run_workload

from oracles import equivalent, minimal_equivalent_subsequence

F = FunctionId
K = ResourceKind


def session():
    s = Session()
    s.record("CreateContext")
    return s


def kept_fns(log):
    return [r.fn for r in prune(log).records]


def test_last_root():
    s = session()
    s.record("Enable", "GL_BLEND")
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    s.record("ClearColor", 1.0, 0.0, 0.0, 1.0)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    s.record("Enable", "GL_BLEND")
    assert find_last_root(s.log) == 4


def test_no_root_is_identity():
    s = session()
    s.record("Enable", "GL_BLEND")
    assert find_last_root(s.log) is None
    assert prune(s.log) == s.log


def test_single_draw():
    s = session()
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert find_last_root(s.log) == 1
    assert kept_fns(s.log) == [F.CreateContext, F.Draw]


def test_empty_log():
    assert prune(TraceLog()) == TraceLog()


def test_texture_selectors_resolve_to_last_bind():
    s = session()
    s.record("GenTextures", 2)
    s.record("BindTexture", "GL_TEXTURE_2D", 1)
    s.record("TexImage", "GL_TEXTURE_2D", 0, "GL_RGBA", 1, 1, b"a")
    s.record("BindTexture", "GL_TEXTURE_2D", 2)
    s.record("TexParameter", "GL_TEXTURE_2D", "GL_TEXTURE_MIN_FILTER", "GL_LINEAR")
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    ann = resolve_selectors(s.log, 6)
    assert (ann[3].owner, ann[3].selector) == (IdRef(K.Texture, 1), 2)
    assert (ann[5].owner, ann[5].selector) == (IdRef(K.Texture, 2), 4)


def test_unbound_write_owner_zero():
    s = session()
    s.record("TexParameter", "GL_TEXTURE_2D", "GL_TEXTURE_MIN_FILTER", "GL_LINEAR")
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    a = resolve_selectors(s.log, 2)[1]
    assert a.owner == IdRef(K.Texture, 0) and a.unresolved


def test_selectors_agree_with_driver_bindings():
    # the pruner's static owner resolution must match where the driver writes
    for seed in range(150):
        log = random_log(seed, 80)
        ann = resolve_selectors(log, log.records[-1].seq if log.records else None)
        rp = Replay()
        for a in ann:
            r = a.record
            if r.fn in TARGET_ADDRESSED:
                kind = TARGET_ADDRESSED[r.fn]
                bindings = (rp.state.texture_bindings if kind == K.Texture
                            else rp.state.buffer_bindings)
                real = bindings.get(r.args[0].name, 0)
                assert a.owner == IdRef(kind, rp.table.to_virtual(kind, real)), (seed, str(r))
            rp.apply(r)


def test_first_clear_color_dropped():
    s = session()
    s.record("ClearColor", 0.1, 0.1, 0.1, 1.0)
    s.record("GenTextures", 1)
    s.record("BindTexture", "GL_TEXTURE_2D", 1)
    s.record("TexImage", "GL_TEXTURE_2D", 0, "GL_RGBA", 1, 1, b"t")
    s.record("ClearColor", 0.9, 0.9, 0.9, 1.0)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    kept = [r.seq for r in prune(s.log).records]
    assert kept == [0, 2, 3, 4, 5, 6]
    assert equivalent(s.log, prune(s.log))


def test_last_capability_call_kept():
    s = session()
    s.record("Enable", "GL_BLEND")
    s.record("Disable", "GL_BLEND")
    s.record("Enable", "GL_BLEND")
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert [r.seq for r in prune(s.log).records] == [0, 3, 4]


def test_deleted_texture_history_dropped():
    s = session()
    s.record("GenTextures", 1)
    s.record("BindTexture", "GL_TEXTURE_2D", 1)
    s.record("TexImage", "GL_TEXTURE_2D", 0, "GL_RGBA", 1, 1, b"t")
    s.record("DeleteTextures", 1)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert kept_fns(s.log) == [F.CreateContext, F.Draw]
    assert equivalent(s.log, prune(s.log))


def test_suffix_after_root_kept_verbatim():
    s = session()
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    s.record("Enable", "GL_BLEND")
    s.record("Disable", "GL_BLEND")
    assert [r.seq for r in prune(s.log).records] == [0, 1, 2, 3]


def test_partially_deleted_multi_gen_keeps_delete():
    s = session()
    s.record("GenTextures", 2)
    s.record("DeleteTextures", 1)
    s.record("BindTexture", "GL_TEXTURE_2D", 2)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert equivalent(s.log, prune(s.log))
    assert F.DeleteTextures in kept_fns(s.log)


def test_binding_cleared_by_delete_stays_cleared():
    s = session()
    s.record("GenTextures", 2)
    s.record("BindTexture", "GL_TEXTURE_2D", 1)
    s.record("TexImage", "GL_TEXTURE_2D", 0, "GL_RGBA", 1, 1, b"1")
    s.record("BindTexture", "GL_TEXTURE_2D", 2)
    s.record("DeleteTextures", 2)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert equivalent(s.log, prune(s.log))


def test_dead_shader_of_live_program_kept():
    s = session()
    (sh,) = s.record("CreateShader", "GL_VERTEX_SHADER")
    s.record("ShaderSource", sh, b"src")
    s.record("CompileShader", sh)
    (p,) = s.record("CreateProgram")
    s.record("AttachShader", p, sh)
    s.record("LinkProgram", p)
    s.record("DeleteShader", sh)
    s.record("UseProgram", p)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert len(prune(s.log)) == len(s.log)
    assert equivalent(s.log, prune(s.log))


def test_reasons_are_recorded():
    s = session()
    s.record("ClearColor", 0.1, 0.1, 0.1, 1.0)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    live = compute_live_set(resolve_selectors(s.log, 2), 2)
    assert live.reasons[2][0] == "FinalRoot"
    assert live.reasons[1][0] == "LastWriteOf"
    assert live.reasons[0][0] == "Context"


def test_random_logs_equivalent_and_idempotent():
    for seed in range(300):
        log = random_log(seed, 120)
        pruned = prune(log)
        assert equivalent(log, pruned), seed
        assert prune(pruned) == pruned, seed
        assert len(pruned) <= size_bound(log)


def test_pruned_is_subsequence():
    for seed in range(100):
        log = random_log(seed, 60)
        kept = [r.seq for r in prune(log).records]
        assert kept == sorted(kept)
        assert set(kept) <= {r.seq for r in log.records}


def test_workload_logs_equivalent():
    for seed in range(3):
        log = run_workload(WorkloadProfile(seed=seed, frames=12, churn=0.3)).log
        assert equivalent(log, prune(log))


def test_never_shorter_than_brute_force_minimum():
    for seed in range(120):
        log = random_log(seed, 10)
        minimal = minimal_equivalent_subsequence(log)
        pruned = prune(log)
        assert equivalent(log, pruned)
        assert len(minimal) <= len(pruned)


@given(st.integers(0, 2 ** 32), st.integers(0, 80))
def test_prune_equivalence_property(seed, max_calls):
    log = random_log(seed, max_calls)
    pruned = prune(log)
    assert equivalent(log, pruned)
    assert prune(pruned) == pruned
    assert len(pruned) <= size_bound(log)
