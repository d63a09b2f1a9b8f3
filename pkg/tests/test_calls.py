import pytest

from rpr.calls import (
    CATALOG, CallRecord, CategoryKey, EnumToken, FloatScalar, FunctionId, IdRef, IntScalar,
    ResourceKind, RoleTag, SelectorContext, category_key, check_args, classify, function_by_name,
)
from rpr.errors import InvalidCall

F = FunctionId
K = ResourceKind


def rec(seq, fn, *args, rets=(), frame=0):
    return CallRecord(seq, fn, tuple(args), tuple(rets), frame)


def test_roles():
    assert classify(F.Draw) == RoleTag.FrameRoot
    assert classify(F.Finish) == RoleTag.FrameRoot
    assert classify(F.SwapBuffers) == RoleTag.FrameRoot
    assert classify(F.BindTexture) == RoleTag.SelectorBind
    assert classify(F.ClearColor) == RoleTag.StateSet
    assert classify(F.GenTextures) == RoleTag.ResourceGen
    assert classify(F.DeleteTextures) == RoleTag.ResourceDelete
    assert classify(F.LinkProgram) == RoleTag.LifecycleStep


def test_every_function_has_a_signature_and_role():
    for fn in F:
        assert fn in CATALOG
        assert isinstance(classify(fn), RoleTag)
        assert F.from_code(fn.code) is fn


def test_capability_key():
    key = category_key(rec(0, F.Enable, EnumToken("GL_BLEND")), SelectorContext())
    assert key == CategoryKey("capability", (EnumToken("GL_BLEND"),))
    other = category_key(rec(1, F.Disable, EnumToken("GL_BLEND")), SelectorContext())
    assert key == other


def test_tex_param_key_uses_bound_texture():
    ctx = SelectorContext()
    ctx.observe(rec(0, F.BindTexture, EnumToken("GL_TEXTURE_2D"), IdRef(K.Texture, 5)))
    call = rec(1, F.TexParameter, EnumToken("GL_TEXTURE_2D"),
               EnumToken("GL_TEXTURE_MIN_FILTER"), EnumToken("GL_LINEAR"))
    key = category_key(call, ctx)
    assert key == CategoryKey("texParam", (IdRef(K.Texture, 5), EnumToken("GL_TEXTURE_2D"),
                                           EnumToken("GL_TEXTURE_MIN_FILTER")))


def test_clear_color_key_has_no_discriminators():
    key = category_key(rec(0, F.ClearColor, *[FloatScalar(0.0)] * 4), SelectorContext())
    assert key == CategoryKey("ClearColor")


def test_unbound_target_resolves_to_owner_zero():
    call = rec(0, F.TexParameter, EnumToken("GL_TEXTURE_2D"),
               EnumToken("GL_TEXTURE_MIN_FILTER"), EnumToken("GL_LINEAR"))
    key = category_key(call, SelectorContext())
    assert key.discriminators[0] == IdRef(K.Texture, 0)


def test_record_text_form():
    r = rec(7, F.ClearColor, *[FloatScalar(v) for v in (0.5, 0.5, 0.5, 1.0)], frame=2)
    assert str(r) == "7 ClearColor(0.5,0.5,0.5,1.0) @f2"
    r = rec(3, F.GenTextures, IntScalar(2), rets=[(K.Texture, 1), (K.Texture, 2)])
    assert str(r) == "3 GenTextures(2) -> Texture#1,Texture#2 @f0"


def test_check_args_rejects_wrong_shapes():
    with pytest.raises(InvalidCall):
        check_args(F.Enable, (IntScalar(3),))
    with pytest.raises(InvalidCall):
        check_args(F.Viewport, (IntScalar(0),))
    with pytest.raises(InvalidCall):
        check_args(F.DeleteTextures, (IdRef(K.Buffer, 1),))
    check_args(F.DeleteTextures, (IdRef(K.Texture, 1), IdRef(K.Texture, 2)))


def test_scalar_range():
    with pytest.raises(ValueError):
        IntScalar(2 ** 63)
    with pytest.raises(ValueError):
        EnumToken("GL_NOT_A_THING")


def test_function_lookup():
    assert function_by_name("Draw") is F.Draw
    with pytest.raises(KeyError):
        function_by_name("Frobnicate")
