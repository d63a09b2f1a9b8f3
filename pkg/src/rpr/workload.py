"""Seeded synthetic call streams.

``generate`` produces a game-like stream: a setup block that creates the
context, textures, buffers and shader programs, then per frame some state
churn, texture binds with parameter writes and streamed uploads, buffer updates,
client arrays, a few draws and a SwapBuffers.  Uploads carry fresh random
bytes, so the raw log keeps growing while the pruned log only keeps the
latest contents.

``random_log`` builds small adversarial logs for property tests by
rejection sampling against the simulated driver.
"""

from __future__ import annotations

import random
from dataclasses import asdict, dataclass, fields

from .calls import ENUM_GROUPS, FunctionId, ResourceKind
from .checkpoint import Session
from .errors import DriverError, TableError

F = FunctionId
K = ResourceKind

_CAPS = sorted(ENUM_GROUPS["capability"])
_CLIENT = sorted(ENUM_GROUPS["client_state"])
_TEX_PARAMS = {
    "GL_TEXTURE_MIN_FILTER": ["GL_NEAREST", "GL_LINEAR", "GL_LINEAR_MIPMAP_LINEAR"],
    "GL_TEXTURE_MAG_FILTER": ["GL_NEAREST", "GL_LINEAR"],
    "GL_TEXTURE_WRAP_S": ["GL_REPEAT", "GL_CLAMP_TO_EDGE"],
    "GL_TEXTURE_WRAP_T": ["GL_REPEAT", "GL_CLAMP_TO_EDGE"],
}


@dataclass
class WorkloadProfile:
    seed: int = 0
    frames: int = 120
    textures_total: int = 64
    textures_touched_per_frame: int = 4
    state_writes_per_frame: int = 24
    upload_bytes: int = 4096
    shader_programs: int = 4
    churn: float = 0.01

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name == "churn":
                if not 0.0 <= v <= 1.0:
                    raise ValueError("churn must be a probability in [0, 1]")
            elif f.name != "seed" and v < 0:
                raise ValueError(f"{f.name} must be >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")

    def replace(self, **changes) -> "WorkloadProfile":
        d = asdict(self)
        d.update(changes)
        return WorkloadProfile(**d)


# profile files accept either spelling
_ALIASES = {
    "texturesTotal": "textures_total",
    "texturesTouchedPerFrame": "textures_touched_per_frame",
    "stateWritesPerFrame": "state_writes_per_frame",
    "uploadBytes": "upload_bytes",
    "shaderPrograms": "shader_programs",
}


def parse_profile(text: str, base: WorkloadProfile = None) -> WorkloadProfile:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    values = asdict(base or WorkloadProfile())
    types = {f.name: f.type for f in fields(WorkloadProfile)}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key=value")
        key, raw = (p.strip() for p in line.split("=", 1))
        key = _ALIASES.get(key, key)
        if key not in values:
            raise ValueError(f"line {lineno}: unknown profile key {key!r}")
        values[key] = float(raw) if types[key] in (float, "float") else int(raw, 0)
    return WorkloadProfile(**values)


def load_profile(path, base: WorkloadProfile = None) -> WorkloadProfile:
    with open(path, encoding="utf-8") as fh:
        return parse_profile(fh.read(), base)


def dump_profile(profile: WorkloadProfile) -> str:
    return "".join(f"{k}={v}\n" for k, v in asdict(profile).items())


def _shader_source(rng, stage, n):
    return f"// {stage} {n}\nvoid main() {{ /* {rng.getrandbits(32):08x} */ }}\n".encode()


def generate(profile: WorkloadProfile):
    """Yield ``(fn, args)`` pairs; ``None`` marks the end of each frame.

    Virtual ids are predicted the way the recorder hands them out (per kind,
    counting up from 1), so the stream can be fed straight into a Session.
    """
    rng = random.Random(profile.seed)
    nbytes = profile.upload_bytes
    next_tex = 1
    yield F.CreateContext, ()
    if profile.frames == 0:
        return

    def new_textures(n):
        nonlocal next_tex
        ids = list(range(next_tex, next_tex + n))
        next_tex += n
        return ids

    textures = []
    if profile.textures_total:
        yield F.GenTextures, (profile.textures_total,)
        textures = new_textures(profile.textures_total)
    for t in textures:
        yield F.BindTexture, ("GL_TEXTURE_2D", t)
        yield F.TexParameter, ("GL_TEXTURE_2D", "GL_TEXTURE_MIN_FILTER", "GL_LINEAR")
        yield F.TexImage, ("GL_TEXTURE_2D", 0, "GL_RGBA", 32, 32, rng.randbytes(nbytes))
    yield F.GenBuffers, (2,)
    buffers = {"GL_ARRAY_BUFFER": 1, "GL_ELEMENT_ARRAY_BUFFER": 2}
    for target, b in buffers.items():
        yield F.BindBuffer, (target, b)
        yield F.BufferData, (target, rng.randbytes(nbytes), "GL_STATIC_DRAW")
    programs = []
    for n in range(profile.shader_programs):
        shaders = []
        for stage in ("GL_VERTEX_SHADER", "GL_FRAGMENT_SHADER"):
            s = 2 * n + len(shaders) + 1
            yield F.CreateShader, (stage,)
            yield F.ShaderSource, (s, _shader_source(rng, stage, n))
            yield F.CompileShader, (s,)
            shaders.append(s)
        p = n + 1
        yield F.CreateProgram, ()
        for s in shaders:
            yield F.AttachShader, (p, s)
        yield F.LinkProgram, (p,)
        programs.append(p)
    yield F.MatrixMode, ("GL_PROJECTION",)
    yield F.LoadMatrix, tuple(float(i % 5 == 0) for i in range(16))
    yield F.MatrixMode, ("GL_MODELVIEW",)

    for _frame in range(profile.frames):
        yield F.Clear, (0x4100,)
        for _ in range(profile.state_writes_per_frame):
            pick = rng.random()
            if pick < 0.15:
                yield F.ClearColor, tuple(round(rng.random(), 3) for _ in range(4))
            elif pick < 0.25:
                yield F.Viewport, (0, 0, rng.choice((640, 800, 1024)), rng.choice((480, 600, 768)))
            elif pick < 0.65:
                yield rng.choice((F.Enable, F.Disable)), (rng.choice(_CAPS),)
            elif pick < 0.75:
                yield (rng.choice((F.EnableClientState, F.DisableClientState)),
                       (rng.choice(_CLIENT),))
            else:
                yield F.LoadMatrix, tuple(round(rng.uniform(-1, 1), 4) for _ in range(16))
        if textures and rng.random() < profile.churn:
            victim = rng.randrange(len(textures))
            yield F.DeleteTextures, (textures[victim],)
            yield F.GenTextures, (1,)
            (fresh_id,) = new_textures(1)
            textures[victim] = fresh_id
            yield F.BindTexture, ("GL_TEXTURE_2D", fresh_id)
            yield F.TexImage, ("GL_TEXTURE_2D", 0, "GL_RGBA", 32, 32, rng.randbytes(nbytes))
        for target, b in buffers.items():
            yield F.BindBuffer, (target, b)
            yield F.BufferData, (target, rng.randbytes(nbytes), "GL_STREAM_DRAW")
        for ptr in (F.VertexPointer, F.TexCoordPointer, F.ColorPointer):
            yield ptr, (3, "GL_FLOAT", 0, rng.randbytes(nbytes))
        if programs:
            yield F.UseProgram, (rng.choice(programs),)
        touched = rng.sample(textures, min(profile.textures_touched_per_frame, len(textures)))
        for t in touched:
            yield F.BindTexture, ("GL_TEXTURE_2D", t)
            pname = rng.choice(sorted(_TEX_PARAMS))
            yield F.TexParameter, ("GL_TEXTURE_2D", pname, rng.choice(_TEX_PARAMS[pname]))
            yield F.TexImage, ("GL_TEXTURE_2D", 0, "GL_RGBA", 32, 32, rng.randbytes(nbytes))
            yield F.BindBuffer, ("GL_ARRAY_BUFFER", buffers["GL_ARRAY_BUFFER"])
            yield F.BufferData, ("GL_ARRAY_BUFFER", rng.randbytes(nbytes), "GL_STREAM_DRAW")
            yield F.Draw, ("GL_TRIANGLES", 0, rng.randrange(3, 3000, 3))
        if not touched:
            yield F.Draw, ("GL_TRIANGLES", 0, 3)
        yield F.SwapBuffers, ()
        yield None


def run_workload(profile: WorkloadProfile, session: Session = None, on_frame=None) -> Session:
    """Record ``generate(profile)`` into a session.

    ``on_frame(session, frames_done)`` is called after each SwapBuffers.
    """
    session = session if session is not None else Session()
    done = 0
    for item in generate(profile):
        if item is None:
            done += 1
            if on_frame is not None:
                on_frame(session, done)
            continue
        fn, args = item
        session.record(fn, *args)
    return session


# -- random logs for property tests ---------------------------------------------

def _random_call(rng: random.Random, session: Session):
    t = session.table

    def some(kind):
        # mostly ids that were handed out, sometimes 0 or a stale/unknown one
        top = t.next_virtual(kind)
        return rng.randrange(0, top + 1) if rng.random() < 0.2 else rng.randrange(1, max(top, 2))

    def blob():
        return bytes([rng.randrange(4)]) * rng.randrange(0, 4)

    tex_target = rng.choice(("GL_TEXTURE_2D", "GL_TEXTURE_2D", "GL_TEXTURE_1D"))
    buf_target = rng.choice(("GL_ARRAY_BUFFER", "GL_ELEMENT_ARRAY_BUFFER"))
    choices = [
        (2, lambda: (F.CreateContext, ())),
        (1, lambda: (F.ResetContext, ())),
        (0.3, lambda: (F.DestroyContext, (1,))),
        (4, lambda: (F.ClearColor, tuple(float(rng.randrange(3)) for _ in range(4)))),
        (2, lambda: (F.Clear, (rng.choice((0x100, 0x4000, 0x4100)),))),
        (2, lambda: (F.Viewport, (0, 0, rng.randrange(1, 3), 1))),
        (3, lambda: (rng.choice((F.Enable, F.Disable)), (rng.choice(_CAPS[:3]),))),
        (2, lambda: (rng.choice((F.EnableClientState, F.DisableClientState)),
                     (rng.choice(_CLIENT[:2]),))),
        (2, lambda: (F.MatrixMode, (rng.choice(("GL_MODELVIEW", "GL_PROJECTION")),))),
        (2, lambda: (F.LoadMatrix, tuple(float(rng.randrange(2)) for _ in range(16)))),
        (4, lambda: (F.GenTextures, (rng.randrange(1, 3),))),
        (2, lambda: (F.DeleteTextures, tuple(some(K.Texture)
                                             for _ in range(rng.randrange(1, 3))))),
        (5, lambda: (F.BindTexture, (tex_target, some(K.Texture)))),
        (4, lambda: (F.TexParameter, (tex_target, rng.choice(sorted(_TEX_PARAMS)[:2]),
                                      rng.choice(("GL_NEAREST", "GL_LINEAR"))))),
        (3, lambda: (F.TexImage, (tex_target, rng.randrange(2), "GL_RGBA", 1, 1, blob()))),
        (3, lambda: (F.GenBuffers, (rng.randrange(1, 3),))),
        (1, lambda: (F.DeleteBuffers, (some(K.Buffer),))),
        (3, lambda: (F.BindBuffer, (buf_target, some(K.Buffer)))),
        (3, lambda: (F.BufferData, (buf_target, blob(), "GL_STATIC_DRAW"))),
        (1, lambda: (F.VertexPointer, (3, "GL_FLOAT", 0, blob()))),
        (2, lambda: (F.CreateShader, (rng.choice(("GL_VERTEX_SHADER", "GL_FRAGMENT_SHADER")),))),
        (2, lambda: (F.ShaderSource, (some(K.Shader), blob()))),
        (2, lambda: (F.CompileShader, (some(K.Shader),))),
        (1, lambda: (F.DeleteShader, (some(K.Shader),))),
        (2, lambda: (F.CreateProgram, ())),
        (4, lambda: (F.AttachShader, (some(K.Program), some(K.Shader)))),
        (2, lambda: (F.LinkProgram, (some(K.Program),))),
        (2, lambda: (F.UseProgram, (some(K.Program),))),
        (1, lambda: (F.DeleteProgram, (some(K.Program),))),
        (4, lambda: (F.Draw, ("GL_TRIANGLES", 0, rng.randrange(3)))),
        (1, lambda: (F.Finish, ())),
        (2, lambda: (F.SwapBuffers, ())),
    ]
    weights = [w for w, _ in choices]
    return rng.choices(choices, weights)[0][1]()


def random_session(seed: int, max_calls: int = 40, start_with_context: bool = True,
                   attempts: int = None) -> Session:
    """Record up to ``max_calls`` random valid calls into a fresh session."""
    rng = random.Random(seed)
    session = Session()
    if start_with_context and max_calls > 0:
        session.record(F.CreateContext)
    n = rng.randrange(0, max_calls + 1)
    attempts = attempts if attempts is not None else 20 * max_calls + 20
    while len(session.records) < n and attempts > 0:
        attempts -= 1
        fn, args = _random_call(rng, session)
        try:
            session.record(fn, *args)
        except (DriverError, TableError, ValueError):
            continue
    return session


def random_log(seed: int, max_calls: int = 40, **kw):
    return random_session(seed, max_calls, **kw).log
