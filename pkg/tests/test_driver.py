import pytest

from rpr.calls import EnumToken, IdRef, ResourceKind
from rpr.checkpoint import Session
from rpr.driver import FRESH_STATE_DIGEST, apply, fresh, render, replay, state_digest
from rpr.errors import InvalidCall, NoContext, UnknownVirtualId, UseAfterDelete
from rpr.ids import TranslationTable
from rpr.workload import random_log

K = ResourceKind


def ctx_session(base=0):
    s = Session(real_id_base=base)
    s.record("CreateContext")
    return s


def test_fresh_defaults():
    st = fresh()
    assert st.capabilities.get("GL_BLEND", False) is False
    assert st.frame_count == 0
    assert state_digest(fresh(), TranslationTable()) == state_digest(fresh(), TranslationTable())
    assert state_digest(fresh(), TranslationTable()).hex() == FRESH_STATE_DIGEST


def test_fresh_digest_ignores_real_id_base():
    assert state_digest(fresh(1000), TranslationTable()).hex() == FRESH_STATE_DIGEST


def test_tex_parameter_lands_on_bound_texture():
    s = ctx_session()
    ids = s.record("GenTextures", 5)
    s.record("BindTexture", "GL_TEXTURE_2D", ids[4])
    s.record("TexParameter", "GL_TEXTURE_2D", "GL_TEXTURE_MIN_FILTER", "GL_LINEAR")
    real = s.table.to_real(K.Texture, 5)
    assert s.state.textures[real].params[("GL_TEXTURE_2D", "GL_TEXTURE_MIN_FILTER")] == \
        EnumToken("GL_LINEAR")


def test_last_capability_call_wins():
    s = ctx_session()
    s.record("Enable", "GL_BLEND")
    s.record("Disable", "GL_BLEND")
    assert s.state.capabilities["GL_BLEND"] is False


def test_delete_clears_binding_and_writes_hit_sink():
    s = ctx_session()
    (t,) = s.record("GenTextures", 1)
    s.record("BindTexture", "GL_TEXTURE_2D", t)
    s.record("DeleteTextures", t)
    assert "GL_TEXTURE_2D" not in s.state.texture_bindings
    s.record("TexImage", "GL_TEXTURE_2D", 0, "GL_RGBA", 1, 1, b"px")
    assert ("GL_TEXTURE_2D", 0) in s.state.textures[0].images


def test_use_after_delete():
    s = ctx_session()
    (t,) = s.record("GenTextures", 1)
    s.record("DeleteTextures", t)
    with pytest.raises(UseAfterDelete):
        s.record("BindTexture", "GL_TEXTURE_2D", t)


def test_calls_need_a_context():
    with pytest.raises(NoContext):
        Session().record("ClearColor", 1.0, 0.0, 0.0, 1.0)


def test_failed_call_leaves_state_untouched():
    s = ctx_session()
    s.record("GenTextures", 1)
    before = (s.digest, len(s.records), s.table.triples())
    with pytest.raises(InvalidCall):
        s.record("DeleteTextures", 1, 1)
    with pytest.raises(InvalidCall):
        s.record("Enable", "GL_TEXTURE_WRAP_S")
    with pytest.raises(UnknownVirtualId):
        s.record("BindTexture", "GL_TEXTURE_2D", 9)
    assert (s.digest, len(s.records), s.table.triples()) == before


def test_digest_independent_of_real_ids():
    a = random_log(5, 80)
    ra, rb = replay(a, real_id_base=0), replay(a, real_id_base=12345)
    assert ra.digest == rb.digest
    assert ra.frame_digest == rb.frame_digest
    assert ra.state.textures.keys() != rb.state.textures.keys() or not ra.state.textures


def test_observable_changes_change_digests():
    s = ctx_session()
    d0 = s.digest
    s.record("Enable", "GL_BLEND")
    assert s.digest != d0
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    f1 = s.frame_digest
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert s.frame_digest == f1
    s.record("ClearColor", 0.25, 0.0, 0.0, 1.0)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert s.frame_digest != f1


def test_render_needs_context():
    with pytest.raises(NoContext):
        render(fresh())


def test_apply_is_pure():
    s = ctx_session()
    rec = s.records[0]
    st, table = fresh(), TranslationTable()
    st2, table2 = apply(st, rec, table)
    assert st.context_alive is False and table.triples() == []
    assert st2.context_alive is True and table2.knows(K.Context, 1)


def test_shader_lifecycle_and_link_snapshot():
    s = ctx_session()
    (sh,) = s.record("CreateShader", "GL_VERTEX_SHADER")
    s.record("ShaderSource", sh, b"void main(){}")
    s.record("CompileShader", sh)
    (p,) = s.record("CreateProgram")
    s.record("AttachShader", p, sh)
    s.record("LinkProgram", p)
    s.record("UseProgram", p)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    f1 = s.frame_digest
    # recompiling after the link must not change what the program runs
    s.record("ShaderSource", sh, b"void main(){ discard; }")
    s.record("CompileShader", sh)
    s.record("DeleteShader", sh)
    s.record("Draw", "GL_TRIANGLES", 0, 3)
    assert s.frame_digest == f1
    s.record("DeleteProgram", p)
    assert s.state.current_program == 0


def test_reset_context_restores_defaults_but_keeps_frames():
    s = ctx_session()
    s.record("Enable", "GL_BLEND")
    s.record("Finish")
    s.record("ResetContext")
    assert s.state.frame_count == 1
    fresh_ctx = ctx_session()
    assert s.state.capabilities == fresh_ctx.state.capabilities


def test_id_refs_round_through_table():
    s = ctx_session(base=40)
    (t,) = s.record("GenTextures", 1)
    assert t == IdRef(K.Texture, 1)
    assert s.table.to_real(K.Texture, 1) == 41
