"""Call catalog, argument values and call records.

The catalog is closed: every function, its parameter slots, the resource kind
it creates or destroys and its role for pruning are fixed here, and both
codecs plus the driver derive from this table.  ``docs/FORMATS.md`` publishes
the same table (catalog version ``CATALOG_VERSION``).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

from .errors import InvalidCall

CATALOG_VERSION = 1

INT64_MIN = -(2 ** 63)
INT64_MAX = 2 ** 63 - 1


class ResourceKind(enum.IntEnum):
    Context = 1
    Texture = 2
    Buffer = 3
    Shader = 4
    Program = 5


# name -> (numeric value, group).  Numeric values are the usual GL constants.
GL_ENUMS = {
    # capabilities (Enable/Disable)
    "GL_ALPHA_TEST": (0x0BC0, "capability"),
    "GL_BLEND": (0x0BE2, "capability"),
    "GL_CULL_FACE": (0x0B44, "capability"),
    "GL_DEPTH_TEST": (0x0B71, "capability"),
    "GL_FOG": (0x0B60, "capability"),
    "GL_LIGHTING": (0x0B50, "capability"),
    "GL_SCISSOR_TEST": (0x0C11, "capability"),
    "GL_STENCIL_TEST": (0x0B90, "capability"),
    "GL_POLYGON_OFFSET_FILL": (0x8037, "capability"),
    # client state arrays
    "GL_VERTEX_ARRAY": (0x8074, "client_state"),
    "GL_NORMAL_ARRAY": (0x8075, "client_state"),
    "GL_COLOR_ARRAY": (0x8076, "client_state"),
    "GL_TEXTURE_COORD_ARRAY": (0x8078, "client_state"),
    # matrix modes
    "GL_MODELVIEW": (0x1700, "matrix_mode"),
    "GL_PROJECTION": (0x1701, "matrix_mode"),
    "GL_TEXTURE": (0x1702, "matrix_mode"),
    # texture targets (GL_TEXTURE_2D doubles as a capability)
    "GL_TEXTURE_1D": (0x0DE0, "texture_target"),
    "GL_TEXTURE_2D": (0x0DE1, "texture_target"),
    "GL_TEXTURE_3D": (0x806F, "texture_target"),
    "GL_TEXTURE_CUBE_MAP": (0x8513, "texture_target"),
    # texture parameter names and values
    "GL_TEXTURE_MAG_FILTER": (0x2800, "texture_param"),
    "GL_TEXTURE_MIN_FILTER": (0x2801, "texture_param"),
    "GL_TEXTURE_WRAP_S": (0x2802, "texture_param"),
    "GL_TEXTURE_WRAP_T": (0x2803, "texture_param"),
    "GL_TEXTURE_MAX_LEVEL": (0x813D, "texture_param"),
    "GL_NEAREST": (0x2600, "texture_value"),
    "GL_LINEAR": (0x2601, "texture_value"),
    "GL_NEAREST_MIPMAP_NEAREST": (0x2700, "texture_value"),
    "GL_LINEAR_MIPMAP_LINEAR": (0x2703, "texture_value"),
    "GL_REPEAT": (0x2901, "texture_value"),
    "GL_CLAMP_TO_EDGE": (0x812F, "texture_value"),
    # image formats
    "GL_RGB": (0x1907, "internal_format"),
    "GL_RGBA": (0x1908, "internal_format"),
    "GL_LUMINANCE": (0x1909, "internal_format"),
    # buffers
    "GL_ARRAY_BUFFER": (0x8892, "buffer_target"),
    "GL_ELEMENT_ARRAY_BUFFER": (0x8893, "buffer_target"),
    "GL_STREAM_DRAW": (0x88E0, "buffer_usage"),
    "GL_STATIC_DRAW": (0x88E4, "buffer_usage"),
    "GL_DYNAMIC_DRAW": (0x88E8, "buffer_usage"),
    # component types
    "GL_UNSIGNED_BYTE": (0x1401, "data_type"),
    "GL_SHORT": (0x1402, "data_type"),
    "GL_FLOAT": (0x1406, "data_type"),
    # shaders
    "GL_FRAGMENT_SHADER": (0x8B30, "shader_type"),
    "GL_VERTEX_SHADER": (0x8B31, "shader_type"),
    # primitive modes
    "GL_POINTS": (0x0000, "draw_mode"),
    "GL_LINES": (0x0001, "draw_mode"),
    "GL_TRIANGLES": (0x0004, "draw_mode"),
    "GL_TRIANGLE_STRIP": (0x0005, "draw_mode"),
}

ENUM_BY_VALUE = {value: name for name, (value, _) in GL_ENUMS.items()}
assert len(ENUM_BY_VALUE) == len(GL_ENUMS), "enum numeric values must be unique"

ENUM_GROUPS: dict[str, tuple[str, ...]] = {}
for _name, (_value, _group) in GL_ENUMS.items():
    ENUM_GROUPS.setdefault(_group, ())
    ENUM_GROUPS[_group] += (_name,)
# GL_TEXTURE_2D is both a texture target and an Enable() capability.
ENUM_GROUPS["capability"] += ("GL_TEXTURE_2D",)

CLEAR_BITS = {
    "GL_DEPTH_BUFFER_BIT": 0x0100,
    "GL_STENCIL_BUFFER_BIT": 0x0400,
    "GL_COLOR_BUFFER_BIT": 0x4000,
}
CLEAR_MASK_ALL = sum(CLEAR_BITS.values())


# -- argument values ---------------------------------------------------------

@dataclass(frozen=True)
class IntScalar:
    value: int

    def __post_init__(self):
        if not (INT64_MIN <= self.value <= INT64_MAX):
            raise ValueError(f"integer {self.value} outside signed 64-bit range")


@dataclass(frozen=True)
class FloatScalar:
    value: float


@dataclass(frozen=True)
class EnumToken:
    name: str

    def __post_init__(self):
        if self.name not in GL_ENUMS:
            raise ValueError(f"unknown enum token {self.name!r}")

    @property
    def value(self) -> int:
        return GL_ENUMS[self.name][0]


@dataclass(frozen=True)
class IdRef:
    """Reference to a resource by virtual id; 0 means "no object"."""

    kind: ResourceKind
    vid: int

    def __post_init__(self):
        if self.vid < 0:
            raise ValueError("virtual ids are non-negative")

    def __str__(self):
        return f"{self.kind.name}#{self.vid}"


@dataclass(frozen=True)
class BlobRef:
    digest: bytes
    length: int

    def __post_init__(self):
        if len(self.digest) != 32:
            raise ValueError("blob digests are 32 bytes")
        if self.length < 0:
            raise ValueError("negative blob length")


ArgValue = Union[IntScalar, FloatScalar, EnumToken, IdRef, BlobRef]


# -- catalog -----------------------------------------------------------------

class FunctionId(enum.Enum):
    CreateContext = "CreateContext"
    ResetContext = "ResetContext"
    DestroyContext = "DestroyContext"
    ClearColor = "ClearColor"
    Clear = "Clear"
    Viewport = "Viewport"
    Enable = "Enable"
    Disable = "Disable"
    EnableClientState = "EnableClientState"
    DisableClientState = "DisableClientState"
    MatrixMode = "MatrixMode"
    LoadMatrix = "LoadMatrix"
    GenTextures = "GenTextures"
    DeleteTextures = "DeleteTextures"
    BindTexture = "BindTexture"
    TexParameter = "TexParameter"
    TexImage = "TexImage"
    GenBuffers = "GenBuffers"
    DeleteBuffers = "DeleteBuffers"
    BindBuffer = "BindBuffer"
    BufferData = "BufferData"
    VertexPointer = "VertexPointer"
    ColorPointer = "ColorPointer"
    TexCoordPointer = "TexCoordPointer"
    CreateShader = "CreateShader"
    ShaderSource = "ShaderSource"
    CompileShader = "CompileShader"
    DeleteShader = "DeleteShader"
    CreateProgram = "CreateProgram"
    AttachShader = "AttachShader"
    LinkProgram = "LinkProgram"
    UseProgram = "UseProgram"
    DeleteProgram = "DeleteProgram"
    Draw = "Draw"
    Finish = "Finish"
    SwapBuffers = "SwapBuffers"

    @property
    def code(self) -> int:
        return _FN_CODES[self]

    @classmethod
    def from_code(cls, code: int) -> "FunctionId":
        return _FN_BY_CODE[code]


_FN_CODES = {fn: i for i, fn in enumerate(FunctionId)}
_FN_BY_CODE = {i: fn for fn, i in _FN_CODES.items()}


class RoleTag(enum.Enum):
    FrameRoot = "FrameRoot"
    StateSet = "StateSet"
    SelectorBind = "SelectorBind"
    ResourceGen = "ResourceGen"
    ResourceDelete = "ResourceDelete"
    LifecycleStep = "LifecycleStep"


class Param(NamedTuple):
    """One parameter slot.

    ``type`` is one of ``int``, ``float``, ``enum``, ``scalar`` (int, float or
    enum), ``id`` or ``blob``.  ``group`` narrows enums to an ``ENUM_GROUPS``
    key and ids to a ``ResourceKind``.
    """
    name: str
    type: str
    group: object = None
    allow_zero: bool = False


class Signature(NamedTuple):
    params: tuple
    variadic: bool = False       # last param repeats zero or more times
    creates: Optional[ResourceKind] = None
    destroys: Optional[ResourceKind] = None


def _p(name, type_, group=None, allow_zero=False):
    return Param(name, type_, group, allow_zero)


K = ResourceKind
_F = FunctionId

CATALOG: dict[FunctionId, Signature] = {
    _F.CreateContext: Signature((), creates=K.Context),
    _F.ResetContext: Signature(()),
    _F.DestroyContext: Signature((_p("context", "id", K.Context),), destroys=K.Context),
    _F.ClearColor: Signature(tuple(_p(c, "float") for c in "rgba")),
    _F.Clear: Signature((_p("mask", "int"),)),
    _F.Viewport: Signature(tuple(_p(c, "int") for c in ("x", "y", "width", "height"))),
    _F.Enable: Signature((_p("cap", "enum", "capability"),)),
    _F.Disable: Signature((_p("cap", "enum", "capability"),)),
    _F.EnableClientState: Signature((_p("array", "enum", "client_state"),)),
    _F.DisableClientState: Signature((_p("array", "enum", "client_state"),)),
    _F.MatrixMode: Signature((_p("mode", "enum", "matrix_mode"),)),
    _F.LoadMatrix: Signature(tuple(_p(f"m{i}", "float") for i in range(16))),
    _F.GenTextures: Signature((_p("n", "int"),), creates=K.Texture),
    _F.DeleteTextures: Signature((_p("textures", "id", K.Texture),), variadic=True,
                                 destroys=K.Texture),
    _F.BindTexture: Signature((_p("target", "enum", "texture_target"),
                               _p("texture", "id", K.Texture, allow_zero=True))),
    _F.TexParameter: Signature((_p("target", "enum", "texture_target"),
                                _p("pname", "enum", "texture_param"),
                                _p("value", "scalar", "texture_value"))),
    _F.TexImage: Signature((_p("target", "enum", "texture_target"),
                            _p("level", "int"),
                            _p("format", "enum", "internal_format"),
                            _p("width", "int"),
                            _p("height", "int"),
                            _p("pixels", "blob"))),
    _F.GenBuffers: Signature((_p("n", "int"),), creates=K.Buffer),
    _F.DeleteBuffers: Signature((_p("buffers", "id", K.Buffer),), variadic=True,
                                destroys=K.Buffer),
    _F.BindBuffer: Signature((_p("target", "enum", "buffer_target"),
                              _p("buffer", "id", K.Buffer, allow_zero=True))),
    _F.BufferData: Signature((_p("target", "enum", "buffer_target"),
                              _p("data", "blob"),
                              _p("usage", "enum", "buffer_usage"))),
    _F.VertexPointer: Signature((_p("size", "int"), _p("type", "enum", "data_type"),
                                 _p("stride", "int"), _p("pointer", "blob"))),
    _F.ColorPointer: Signature((_p("size", "int"), _p("type", "enum", "data_type"),
                                _p("stride", "int"), _p("pointer", "blob"))),
    _F.TexCoordPointer: Signature((_p("size", "int"), _p("type", "enum", "data_type"),
                                   _p("stride", "int"), _p("pointer", "blob"))),
    _F.CreateShader: Signature((_p("type", "enum", "shader_type"),), creates=K.Shader),
    _F.ShaderSource: Signature((_p("shader", "id", K.Shader), _p("source", "blob"))),
    _F.CompileShader: Signature((_p("shader", "id", K.Shader),)),
    _F.DeleteShader: Signature((_p("shader", "id", K.Shader),), destroys=K.Shader),
    _F.CreateProgram: Signature((), creates=K.Program),
    _F.AttachShader: Signature((_p("program", "id", K.Program),
                                _p("shader", "id", K.Shader))),
    _F.LinkProgram: Signature((_p("program", "id", K.Program),)),
    _F.UseProgram: Signature((_p("program", "id", K.Program, allow_zero=True),)),
    _F.DeleteProgram: Signature((_p("program", "id", K.Program),), destroys=K.Program),
    _F.Draw: Signature((_p("mode", "enum", "draw_mode"), _p("first", "int"),
                        _p("count", "int"))),
    _F.Finish: Signature(()),
    _F.SwapBuffers: Signature(()),
}

# Which client-array slot each pointer call writes.
POINTER_KIND = {
    _F.VertexPointer: "GL_VERTEX_ARRAY",
    _F.ColorPointer: "GL_COLOR_ARRAY",
    _F.TexCoordPointer: "GL_TEXTURE_COORD_ARRAY",
}

_ROLES = {
    _F.Draw: RoleTag.FrameRoot,
    _F.Finish: RoleTag.FrameRoot,
    _F.SwapBuffers: RoleTag.FrameRoot,
    _F.BindTexture: RoleTag.SelectorBind,
    _F.BindBuffer: RoleTag.SelectorBind,
    _F.MatrixMode: RoleTag.SelectorBind,
    _F.UseProgram: RoleTag.SelectorBind,
    _F.ShaderSource: RoleTag.LifecycleStep,
    _F.CompileShader: RoleTag.LifecycleStep,
    _F.AttachShader: RoleTag.LifecycleStep,
    _F.LinkProgram: RoleTag.LifecycleStep,
}
for _fn, _sig in CATALOG.items():
    if _sig.creates is not None:
        _ROLES[_fn] = RoleTag.ResourceGen
    elif _sig.destroys is not None:
        _ROLES[_fn] = RoleTag.ResourceDelete
    else:
        _ROLES.setdefault(_fn, RoleTag.StateSet)

assert set(CATALOG) == set(FunctionId)


def classify(fn: FunctionId) -> RoleTag:
    return _ROLES[fn]


def function_by_name(name: str) -> FunctionId:
    """Look up a catalog function; raises KeyError for names outside it."""
    try:
        return FunctionId(name)
    except ValueError:
        raise KeyError(name) from None


# -- call records ------------------------------------------------------------

@dataclass(frozen=True)
class CallRecord:
    seq: int
    fn: FunctionId
    args: tuple = ()
    returned_ids: tuple = ()      # ((ResourceKind, vid), ...)
    frame_index: int = 0

    def __post_init__(self):
        if self.returned_ids and CATALOG[self.fn].creates is None:
            raise ValueError(f"{self.fn.value} does not return ids")

    def __str__(self):
        args = ",".join(map(format_arg, self.args))
        rets = ""
        if self.returned_ids:
            rets = " -> " + ",".join(f"{k.name}#{v}" for k, v in self.returned_ids)
        return f"{self.seq} {self.fn.value}({args}){rets} @f{self.frame_index}"


def format_arg(arg: ArgValue) -> str:
    if isinstance(arg, IntScalar):
        return str(arg.value)
    if isinstance(arg, FloatScalar):
        return repr(float(arg.value))
    if isinstance(arg, EnumToken):
        return arg.name
    if isinstance(arg, IdRef):
        return str(arg)
    if isinstance(arg, BlobRef):
        return f"blob:{arg.digest.hex()}:{arg.length}"
    raise TypeError(f"not an argument value: {arg!r}")


def check_args(fn: FunctionId, args) -> None:
    """Type-check ``args`` against the catalog signature for ``fn``.

    Enum group membership is left to the driver; this only checks the
    variant of every slot and the arity.
    """
    sig = CATALOG[fn]
    params = sig.params
    if sig.variadic:
        fixed = len(params) - 1
        if len(args) < fixed:
            raise InvalidCall(f"{fn.value} takes at least {fixed} arguments")
        slots = list(params[:fixed]) + [params[-1]] * (len(args) - fixed)
    else:
        if len(args) != len(params):
            raise InvalidCall(f"{fn.value} takes {len(params)} arguments, got {len(args)}")
        slots = params
    for param, arg in zip(slots, args):
        if not _matches(param, arg):
            raise InvalidCall(f"{fn.value}: argument {param.name} has wrong type: {arg!r}")


def _matches(param: Param, arg) -> bool:
    t = param.type
    if t == "int":
        return isinstance(arg, IntScalar)
    if t == "float":
        return isinstance(arg, FloatScalar)
    if t == "enum":
        return isinstance(arg, EnumToken)
    if t == "scalar":
        return isinstance(arg, (IntScalar, FloatScalar, EnumToken))
    if t == "blob":
        return isinstance(arg, BlobRef)
    if t == "id":
        return isinstance(arg, IdRef) and arg.kind == param.group and (
            arg.vid > 0 or param.allow_zero)
    raise AssertionError(t)


def blob_refs(record: CallRecord):
    return [a for a in record.args if isinstance(a, BlobRef)]


def id_refs(record: CallRecord):
    return [a for a in record.args if isinstance(a, IdRef) and a.vid]


# -- category keys -----------------------------------------------------------

@dataclass(frozen=True)
class CategoryKey:
    family: str
    discriminators: tuple = ()


@dataclass
class SelectorContext:
    """Selector state in effect at some position of a log.

    Each entry maps to ``(virtual id, seq of the event that set it)``.  The
    event is normally a bind call; a delete that clears a binding also counts
    (the binding then reads ``0``).
    """
    texture_binding_at: dict = field(default_factory=dict)
    buffer_binding_at: dict = field(default_factory=dict)
    matrix_mode_at: tuple = ("GL_MODELVIEW", None)

    def binding_for(self, kind: ResourceKind, target: str):
        table = self.texture_binding_at if kind == ResourceKind.Texture else self.buffer_binding_at
        return table.get(target, (0, None))

    def observe(self, record: CallRecord) -> None:
        """Advance past ``record``."""
        fn = record.fn
        if fn == _F.BindTexture:
            self.texture_binding_at[record.args[0].name] = (record.args[1].vid, record.seq)
        elif fn == _F.BindBuffer:
            self.buffer_binding_at[record.args[0].name] = (record.args[1].vid, record.seq)
        elif fn == _F.MatrixMode:
            self.matrix_mode_at = (record.args[0].name, record.seq)
        elif fn in (_F.DeleteTextures, _F.DeleteBuffers):
            table = (self.texture_binding_at if fn == _F.DeleteTextures
                     else self.buffer_binding_at)
            dead = {a.vid for a in record.args}
            for target, (vid, _) in list(table.items()):
                if vid in dead:
                    table[target] = (0, record.seq)
        elif fn in (_F.ResetContext, _F.DestroyContext, _F.CreateContext):
            self.texture_binding_at.clear()
            self.buffer_binding_at.clear()
            self.matrix_mode_at = ("GL_MODELVIEW", None)


# Calls that write through a target-selected object: fn -> resource kind.
TARGET_ADDRESSED = {
    _F.TexParameter: ResourceKind.Texture,
    _F.TexImage: ResourceKind.Texture,
    _F.BufferData: ResourceKind.Buffer,
}


class UnresolvedSelector(Warning):
    """A target-addressed write with no bound object; it lands in object 0."""


def resolve_owner(call: CallRecord, bindings: SelectorContext):
    """Return ``(owner vid, selector seq)`` for a target-addressed call."""
    kind = TARGET_ADDRESSED[call.fn]
    return bindings.binding_for(kind, call.args[0].name)


def category_key(call: CallRecord, bindings: SelectorContext) -> CategoryKey:
    """Category under which only the last call matters.

    Writes through an unbound target resolve to owner 0; that is not an error
    (see ``UnresolvedSelector``), the key simply carries ``IdRef(kind, 0)``.
    """
    fn = call.fn
    a = call.args
    if fn == _F.ClearColor:
        return CategoryKey("ClearColor")
    if fn == _F.Clear:
        return CategoryKey("clear")
    if fn in (_F.Enable, _F.Disable):
        return CategoryKey("capability", (a[0],))
    if fn in (_F.EnableClientState, _F.DisableClientState):
        return CategoryKey("clientCapability", (a[0],))
    if fn == _F.Viewport:
        return CategoryKey("viewport")
    if fn == _F.LoadMatrix:
        return CategoryKey("matrix", (EnumToken(bindings.matrix_mode_at[0]),))
    if fn in TARGET_ADDRESSED:
        kind = TARGET_ADDRESSED[fn]
        owner = IdRef(kind, resolve_owner(call, bindings)[0])
        if fn == _F.TexParameter:
            return CategoryKey("texParam", (owner, a[0], a[1]))
        if fn == _F.TexImage:
            return CategoryKey("texImage", (owner, a[0], a[1]))
        return CategoryKey("bufferData", (owner, a[0]))
    if fn in POINTER_KIND:
        return CategoryKey("clientArray", (EnumToken(POINTER_KIND[fn]),))
    if fn == _F.BindTexture:
        return CategoryKey("bindTexture", (a[0],))
    if fn == _F.BindBuffer:
        return CategoryKey("bindBuffer", (a[0],))
    if fn == _F.MatrixMode:
        return CategoryKey("matrixMode")
    if fn == _F.UseProgram:
        return CategoryKey("useProgram")
    if fn == _F.ResetContext:
        return CategoryKey("context")
    raise ValueError(f"{fn.value} has no category key (role {classify(fn).value})")
