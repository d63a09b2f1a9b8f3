"""Deterministic simulated driver for the call catalog.

It is the ground truth for replay correctness: two call sequences are
equivalent when they leave drivers with equal ``state_digest`` and equal last
frame digests.  Real ids are allocated from per-kind counters that start at
``real_id_base + 1``, so tests can run the same log against drivers whose
real ids differ.

The canonical form hashed by ``state_digest`` is documented in
docs/FORMATS.md: UTF-8 JSON with sorted keys, no whitespace, all ids in
virtual space.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

from .calls import (
    CATALOG, CLEAR_MASK_ALL, ENUM_GROUPS, POINTER_KIND, BlobRef, CallRecord,
    EnumToken, FloatScalar, FunctionId, IdRef, IntScalar, ResourceKind,
    check_args, classify, RoleTag,
)
from .errors import ContextExists, InvalidCall, NoContext, UnknownVirtualId, UseAfterDelete
from .ids import TranslationTable

F = FunctionId
K = ResourceKind

IDENTITY = tuple(1.0 if i % 5 == 0 else 0.0 for i in range(16))
MATRIX_MODES = ENUM_GROUPS["matrix_mode"]


@dataclass
class TextureObject:
    params: dict = field(default_factory=dict)   # (target, pname) -> ArgValue
    images: dict = field(default_factory=dict)   # (target, level) -> (format, w, h, BlobRef)

    def copy(self):
        return TextureObject(dict(self.params), dict(self.images))


@dataclass
class BufferObject:
    data: Optional[BlobRef] = None
    usage: Optional[str] = None

    def copy(self):
        return BufferObject(self.data, self.usage)


@dataclass
class ShaderObject:
    type: str
    source: Optional[BlobRef] = None
    generation: int = 0
    compiled_source: Optional[BlobRef] = None

    def copy(self):
        return ShaderObject(self.type, self.source, self.generation, self.compiled_source)


@dataclass
class ProgramObject:
    attached: set = field(default_factory=set)
    # shader real id -> (type, generation, compiled source) at last link
    linked_snapshot: dict = field(default_factory=dict)
    linked: bool = False

    def copy(self):
        return ProgramObject(set(self.attached), dict(self.linked_snapshot), self.linked)


@dataclass
class DriverState:
    context_alive: bool = False
    context_real: int = 0
    capabilities: dict = field(default_factory=dict)
    client_capabilities: dict = field(default_factory=dict)
    clear_color: tuple = (0.0, 0.0, 0.0, 0.0)
    clear_mask: Optional[int] = None
    viewport: tuple = (0, 0, 0, 0)
    matrix_mode: str = "GL_MODELVIEW"
    matrices: dict = field(default_factory=lambda: {m: IDENTITY for m in MATRIX_MODES})
    textures: dict = field(default_factory=dict)
    texture_bindings: dict = field(default_factory=dict)
    buffers: dict = field(default_factory=dict)
    buffer_bindings: dict = field(default_factory=dict)
    client_arrays: dict = field(default_factory=dict)   # array name -> (size, type, stride, BlobRef)
    shaders: dict = field(default_factory=dict)
    programs: dict = field(default_factory=dict)
    current_program: int = 0
    frame_count: int = 0
    last_frame_digest: Optional[bytes] = None
    next_real: dict = field(default_factory=dict)

    def copy(self) -> "DriverState":
        return DriverState(
            self.context_alive, self.context_real,
            dict(self.capabilities), dict(self.client_capabilities),
            self.clear_color, self.clear_mask, self.viewport, self.matrix_mode,
            dict(self.matrices),
            {k: v.copy() for k, v in self.textures.items()},
            dict(self.texture_bindings),
            {k: v.copy() for k, v in self.buffers.items()},
            dict(self.buffer_bindings),
            dict(self.client_arrays),
            {k: v.copy() for k, v in self.shaders.items()},
            {k: v.copy() for k, v in self.programs.items()},
            self.current_program, self.frame_count, self.last_frame_digest,
            dict(self.next_real),
        )


def fresh(real_id_base: int = 0) -> DriverState:
    return DriverState(next_real={k: real_id_base + 1 for k in K})


def _reset(state: DriverState, alive: bool) -> None:
    """Back to fresh() but keep the real-id counters (and frame count)."""
    keep_next, frames = state.next_real, state.frame_count
    state.__dict__.update(fresh().__dict__)
    state.next_real = keep_next
    state.frame_count = frames
    state.context_alive = alive


def _alloc(state: DriverState, kind: ResourceKind) -> int:
    real = state.next_real[kind]
    state.next_real[kind] = real + 1
    return real


def _enum(arg: EnumToken, group: str) -> str:
    if arg.name not in ENUM_GROUPS[group]:
        raise InvalidCall(f"{arg.name} is not a valid {group}")
    return arg.name


def _objects(state, kind):
    return {K.Texture: state.textures, K.Buffer: state.buffers,
            K.Shader: state.shaders, K.Program: state.programs}[kind]


def _live_real(state, table, ref: IdRef) -> int:
    """Real id of a live object named by ``ref`` (vid > 0)."""
    try:
        real = table.to_real(ref.kind, ref.vid)
    except UnknownVirtualId:
        if table.knows(ref.kind, ref.vid):
            raise UseAfterDelete(ref.kind, ref.vid) from None
        raise
    if real not in _objects(state, ref.kind):
        raise UseAfterDelete(ref.kind, ref.vid)
    return real


def _bound_real(state, table, ref: IdRef) -> int:
    return 0 if ref.vid == 0 else _live_real(state, table, ref)


# -- per-function semantics ---------------------------------------------------
# Each handler validates every argument before mutating anything so that a
# failed call leaves the state untouched.

def _gen(state, call, table, kind, count):
    rets = call.returned_ids
    if len(rets) != count or any(k != kind for k, _ in rets):
        raise InvalidCall(f"{call.fn.value} must return {count} {kind.name} ids")
    for _, vid in rets:
        if vid <= 0:
            raise InvalidCall("virtual ids start at 1")
        if table.knows(kind, vid):
            if not table.is_pending(kind, vid):
                raise InvalidCall(f"{kind.name}#{vid} was already handed out")
        elif vid < table.next_virtual(kind):
            raise InvalidCall(f"{kind.name}#{vid} would reuse a virtual id")
    if len({vid for _, vid in rets}) != len(rets):
        raise InvalidCall("duplicate returned ids")
    reals = []
    for _, vid in rets:
        real = _alloc(state, kind)
        table.bind_logged(kind, vid, real)
        reals.append(real)
    return reals


def _op_create_context(state, call, table):
    if state.context_alive:
        raise ContextExists("a context is already current")
    (real,) = _gen(state, call, table, K.Context, 1)
    state.context_alive = True
    state.context_real = real


def _op_reset_context(state, call, table):
    real = state.context_real
    _reset(state, alive=True)
    state.context_real = real


def _op_destroy_context(state, call, table):
    ref = call.args[0]
    if table.to_real(K.Context, ref.vid) != state.context_real:
        raise UseAfterDelete(K.Context, ref.vid)
    _reset(state, alive=False)


def _op_clear_color(state, call, table):
    state.clear_color = tuple(a.value for a in call.args)


def _op_clear(state, call, table):
    mask = call.args[0].value
    if mask & ~CLEAR_MASK_ALL or mask < 0:
        raise InvalidCall(f"bad clear mask {mask:#x}")
    state.clear_mask = mask


def _op_viewport(state, call, table):
    x, y, w, h = (a.value for a in call.args)
    if w < 0 or h < 0:
        raise InvalidCall("negative viewport size")
    state.viewport = (x, y, w, h)


def _op_capability(state, call, table):
    state.capabilities[_enum(call.args[0], "capability")] = call.fn == F.Enable


def _op_client_capability(state, call, table):
    state.client_capabilities[_enum(call.args[0], "client_state")] = (
        call.fn == F.EnableClientState)


def _op_matrix_mode(state, call, table):
    state.matrix_mode = _enum(call.args[0], "matrix_mode")


def _op_load_matrix(state, call, table):
    state.matrices[state.matrix_mode] = tuple(a.value for a in call.args)


def _op_gen_objects(state, call, table):
    n = call.args[0].value
    if n < 0:
        raise InvalidCall("negative count")
    kind = CATALOG[call.fn].creates
    objects = _objects(state, kind)
    factory = TextureObject if kind == K.Texture else BufferObject
    for real in _gen(state, call, table, kind, n):
        objects[real] = factory()


def _op_delete_objects(state, call, table):
    kind = CATALOG[call.fn].destroys
    reals = [_live_real(state, table, ref) for ref in call.args]
    if len(set(reals)) != len(reals):
        raise InvalidCall("object listed twice")
    objects = _objects(state, kind)
    bindings = state.texture_bindings if kind == K.Texture else state.buffer_bindings
    dead = set(reals)
    for real in reals:
        del objects[real]
    for target in [t for t, r in bindings.items() if r in dead]:
        del bindings[target]


def _op_bind(state, call, table):
    if call.fn == F.BindTexture:
        target = _enum(call.args[0], "texture_target")
        bindings = state.texture_bindings
    else:
        target = _enum(call.args[0], "buffer_target")
        bindings = state.buffer_bindings
    real = _bound_real(state, table, call.args[1])
    if real:
        bindings[target] = real
    else:
        bindings.pop(target, None)


def _target_texture(state, target):
    real = state.texture_bindings.get(target, 0)
    if real not in state.textures:       # id-0 sink is created on first write
        state.textures[real] = TextureObject()
    return state.textures[real]


def _op_tex_parameter(state, call, table):
    target = _enum(call.args[0], "texture_target")
    pname = _enum(call.args[1], "texture_param")
    value = call.args[2]
    if isinstance(value, EnumToken):
        _enum(value, "texture_value")
    _target_texture(state, target).params[(target, pname)] = value


def _op_tex_image(state, call, table):
    target_arg, level, fmt, width, height, pixels = call.args
    target = _enum(target_arg, "texture_target")
    fmt = _enum(fmt, "internal_format")
    if level.value < 0 or width.value < 0 or height.value < 0:
        raise InvalidCall("negative image level or size")
    _target_texture(state, target).images[(target, level.value)] = (
        fmt, width.value, height.value, pixels)


def _op_buffer_data(state, call, table):
    target = _enum(call.args[0], "buffer_target")
    usage = _enum(call.args[2], "buffer_usage")
    real = state.buffer_bindings.get(target, 0)
    if real not in state.buffers:
        state.buffers[real] = BufferObject()
    buf = state.buffers[real]
    buf.data, buf.usage = call.args[1], usage


def _op_pointer(state, call, table):
    size, type_, stride, pointer = call.args
    _enum(type_, "data_type")
    if size.value not in (1, 2, 3, 4) or stride.value < 0:
        raise InvalidCall("bad pointer size or stride")
    state.client_arrays[POINTER_KIND[call.fn]] = (size.value, type_.name, stride.value, pointer)


def _op_create_shader(state, call, table):
    type_ = _enum(call.args[0], "shader_type")
    (real,) = _gen(state, call, table, K.Shader, 1)
    state.shaders[real] = ShaderObject(type_)


def _op_shader_source(state, call, table):
    real = _live_real(state, table, call.args[0])
    state.shaders[real].source = call.args[1]


def _op_compile_shader(state, call, table):
    shader = state.shaders[_live_real(state, table, call.args[0])]
    shader.generation += 1
    shader.compiled_source = shader.source


def _op_delete_shader(state, call, table):
    real = _live_real(state, table, call.args[0])
    del state.shaders[real]
    for program in state.programs.values():
        program.attached.discard(real)


def _op_create_program(state, call, table):
    (real,) = _gen(state, call, table, K.Program, 1)
    state.programs[real] = ProgramObject()


def _op_attach_shader(state, call, table):
    program = _live_real(state, table, call.args[0])
    shader = _live_real(state, table, call.args[1])
    state.programs[program].attached.add(shader)


def _op_link_program(state, call, table):
    program = state.programs[_live_real(state, table, call.args[0])]
    program.linked_snapshot = {
        s: (state.shaders[s].type, state.shaders[s].generation, state.shaders[s].compiled_source)
        for s in program.attached
    }
    program.linked = bool(program.linked_snapshot)


def _op_use_program(state, call, table):
    state.current_program = _bound_real(state, table, call.args[0])


def _op_delete_program(state, call, table):
    real = _live_real(state, table, call.args[0])
    del state.programs[real]
    if state.current_program == real:
        state.current_program = 0


def _op_frame(state, call, table):
    if call.fn == F.Draw:
        _enum(call.args[0], "draw_mode")
        if call.args[1].value < 0 or call.args[2].value < 0:
            raise InvalidCall("negative draw range")
    state.frame_count += 1
    state.last_frame_digest = render(state)


_HANDLERS = {
    F.CreateContext: _op_create_context,
    F.ResetContext: _op_reset_context,
    F.DestroyContext: _op_destroy_context,
    F.ClearColor: _op_clear_color,
    F.Clear: _op_clear,
    F.Viewport: _op_viewport,
    F.Enable: _op_capability,
    F.Disable: _op_capability,
    F.EnableClientState: _op_client_capability,
    F.DisableClientState: _op_client_capability,
    F.MatrixMode: _op_matrix_mode,
    F.LoadMatrix: _op_load_matrix,
    F.GenTextures: _op_gen_objects,
    F.DeleteTextures: _op_delete_objects,
    F.BindTexture: _op_bind,
    F.TexParameter: _op_tex_parameter,
    F.TexImage: _op_tex_image,
    F.GenBuffers: _op_gen_objects,
    F.DeleteBuffers: _op_delete_objects,
    F.BindBuffer: _op_bind,
    F.BufferData: _op_buffer_data,
    F.VertexPointer: _op_pointer,
    F.ColorPointer: _op_pointer,
    F.TexCoordPointer: _op_pointer,
    F.CreateShader: _op_create_shader,
    F.ShaderSource: _op_shader_source,
    F.CompileShader: _op_compile_shader,
    F.DeleteShader: _op_delete_shader,
    F.CreateProgram: _op_create_program,
    F.AttachShader: _op_attach_shader,
    F.LinkProgram: _op_link_program,
    F.UseProgram: _op_use_program,
    F.DeleteProgram: _op_delete_program,
    F.Draw: _op_frame,
    F.Finish: _op_frame,
    F.SwapBuffers: _op_frame,
}
assert set(_HANDLERS) == set(F)


def apply_in_place(state: DriverState, call: CallRecord, table: TranslationTable) -> None:
    """Execute ``call`` against ``state``, updating ``table`` for creates.

    On error neither ``state`` nor ``table`` is modified.
    """
    if not state.context_alive and call.fn != F.CreateContext:
        raise NoContext(f"{call.fn.value} without a current context")
    check_args(call.fn, call.args)
    if call.returned_ids and classify(call.fn) != RoleTag.ResourceGen:
        raise InvalidCall(f"{call.fn.value} returns no ids")
    _HANDLERS[call.fn](state, call, table)


def apply(state: DriverState, call: CallRecord, table: TranslationTable):
    """Pure form: returns ``(new_state, new_table)`` and leaves inputs alone."""
    state, table = state.copy(), table.copy()
    apply_in_place(state, call, table)
    return state, table


# -- canonical forms and digests -------------------------------------------

def _arg_json(arg):
    if isinstance(arg, IntScalar):
        return ["i", arg.value]
    if isinstance(arg, FloatScalar):
        return ["f", arg.value]
    if isinstance(arg, EnumToken):
        return ["e", arg.name]
    raise TypeError(arg)


def _blob_json(ref):
    return None if ref is None else [ref.digest.hex(), ref.length]


def _texture_json(tex: TextureObject):
    return {
        "params": sorted([t, p, _arg_json(v)] for (t, p), v in tex.params.items()),
        "images": sorted([t, lvl, f, w, h, _blob_json(b)]
                         for (t, lvl), (f, w, h, b) in tex.images.items()),
    }


def _buffer_json(buf: BufferObject):
    return {"data": _blob_json(buf.data), "usage": buf.usage}


def _shader_json(sh: ShaderObject):
    return {"type": sh.type, "source": _blob_json(sh.source), "generation": sh.generation,
            "compiled": _blob_json(sh.compiled_source)}


def _empty(obj) -> bool:
    if isinstance(obj, TextureObject):
        return not obj.params and not obj.images
    return obj.data is None


def _canonical(doc) -> bytes:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), allow_nan=True).encode()


def _common_json(state: DriverState) -> dict:
    return {
        "capabilities": sorted(c for c, on in state.capabilities.items() if on),
        "clientCapabilities": sorted(c for c, on in state.client_capabilities.items() if on),
        "clearColor": list(state.clear_color),
        "clearMask": state.clear_mask,
        "viewport": list(state.viewport),
        "matrices": {m: list(v) for m, v in state.matrices.items()},
        "clientArrays": {k: [s, t, st, _blob_json(b)]
                         for k, (s, t, st, b) in state.client_arrays.items()},
    }


def canonical_state(state: DriverState, table: TranslationTable) -> dict:
    def tex_v(real):
        return table.to_virtual(K.Texture, real)

    def buf_v(real):
        return table.to_virtual(K.Buffer, real)

    def sh_v(real):
        return table.to_virtual(K.Shader, real)

    doc = _common_json(state)
    doc.update({
        "format": 1,
        "contextAlive": state.context_alive,
        "matrixMode": state.matrix_mode,
        "textures": {str(tex_v(r)): _texture_json(t) for r, t in state.textures.items()
                     if r or not _empty(t)},
        "textureBindings": {t: tex_v(r) for t, r in state.texture_bindings.items()},
        "buffers": {str(buf_v(r)): _buffer_json(b) for r, b in state.buffers.items()
                    if r or not _empty(b)},
        "bufferBindings": {t: buf_v(r) for t, r in state.buffer_bindings.items()},
        "shaders": {str(sh_v(r)): _shader_json(s) for r, s in state.shaders.items()},
        "programs": {
            str(table.to_virtual(K.Program, r)): {
                "attached": sorted(sh_v(s) for s in p.attached),
                "linked": p.linked,
                "snapshot": sorted([sh_v(s), t, g, _blob_json(c)]
                                   for s, (t, g, c) in p.linked_snapshot.items()),
            }
            for r, p in state.programs.items()
        },
        "currentProgram": table.to_virtual(K.Program, state.current_program),
        "lastFrame": state.last_frame_digest.hex() if state.last_frame_digest else None,
    })
    return doc


def state_digest(state: DriverState, table: TranslationTable) -> bytes:
    """sha256 of the canonical virtual-id form of ``state``.

    The frame counter and the real-id counters are not observable state and
    are left out, so logs with fewer (pruned) frames compare equal.
    """
    return hashlib.sha256(_canonical(canonical_state(state, table))).digest()


def render(state: DriverState) -> bytes:
    """Frame digest: hash of everything a draw consumes, resolved to contents."""
    if not state.context_alive:
        raise NoContext("render without a context")
    doc = _common_json(state)
    doc["textures"] = {t: _texture_json(state.textures[r])
                       for t, r in state.texture_bindings.items()}
    doc["buffers"] = {t: _buffer_json(state.buffers[r])
                      for t, r in state.buffer_bindings.items()}
    program = state.programs.get(state.current_program)
    doc["program"] = None if program is None else {
        "linked": program.linked,
        "stages": sorted([t, g, _blob_json(c)] for t, g, c in program.linked_snapshot.values()),
    }
    return hashlib.sha256(_canonical(doc)).digest()


# Digest of fresh() under an empty table, canonical format 1.
FRESH_STATE_DIGEST = "a497bf473b4bdee4fe4a73ce9f9e62b21507499b578395f01bf9b8ea970d75cc"


# -- replay ---------------------------------------------------------------------

class Replay:
    """A driver plus translation table fed from a log."""

    def __init__(self, real_id_base: int = 0, table: Optional[TranslationTable] = None):
        self.state = fresh(real_id_base)
        self.table = table if table is not None else TranslationTable()

    def apply(self, record: CallRecord) -> None:
        apply_in_place(self.state, record, self.table)

    def run(self, records) -> "Replay":
        for r in records:
            self.apply(r)
        return self

    @property
    def digest(self) -> bytes:
        return state_digest(self.state, self.table)

    @property
    def frame_digest(self) -> Optional[bytes]:
        return self.state.last_frame_digest


def replay(log, real_id_base: int = 0) -> Replay:
    rp = Replay(real_id_base)
    rp.run(log.records if hasattr(log, "records") else log)
    for kind, n in getattr(log, "counters", {}).items():
        if n > rp.table.next_virtual(kind):
            rp.table.set_counter(kind, n)
    return rp
