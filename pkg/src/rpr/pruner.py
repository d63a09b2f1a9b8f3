"""Log pruning: keep only the calls needed to rebuild state at the last frame.

The last frame root (Draw/Finish/SwapBuffers) anchors everything.  Calls after
it are kept verbatim.  Before it, a state write survives only if it is the
last write of its category; target-addressed writes also keep the bind they
resolved through, every live object keeps the call that created it, and
shader/program lifecycles are kept whole.

A handful of closure rules keep the result replayable as a plain
subsequence:

* a kept create call that also made objects which are dead at the anchor
  drags in the delete calls for those objects (otherwise replay would leave
  them alive), and a kept delete drags in the creates of everything it names;
* a dead shader attached to a kept program is kept with its whole lifecycle
  and its delete, so the program's attach list and link snapshot replay
  exactly;
* when a binding was last cleared by deleting the bound object, and some
  kept bind to that target would otherwise leave a stale object bound, the
  clearing bind/delete pair is kept too.
"""

from __future__ import annotations

import bisect
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

from .calls import (
    TARGET_ADDRESSED, CallRecord, CategoryKey, FunctionId, IdRef, ResourceKind, RoleTag,
    SelectorContext, category_key, classify, resolve_owner,
)
from .tracelog import TraceLog

F = FunctionId
K = ResourceKind

_BIND_KIND = {F.BindTexture: K.Texture, F.BindBuffer: K.Buffer}
_DELETE_KIND = {F.DeleteTextures: K.Texture, F.DeleteBuffers: K.Buffer}
_LIFECYCLE_OWNER = {            # lifecycle fn -> index of the arg that owns the step
    F.ShaderSource: 0, F.CompileShader: 0, F.AttachShader: 0, F.LinkProgram: 0,
}


@dataclass
class Annotated:
    record: CallRecord
    key: Optional[CategoryKey] = None
    owner: Optional[IdRef] = None        # resolved object for target-addressed writes
    selector: Optional[int] = None       # seq of the event that established the owner / mode
    unresolved: bool = False             # target-addressed write with nothing bound


@dataclass
class LiveSet:
    keep: set = field(default_factory=set)
    reasons: dict = field(default_factory=dict)    # seq -> (reason, detail)

    def add(self, seq, reason, detail=None) -> bool:
        if seq in self.keep:
            return False
        self.keep.add(seq)
        self.reasons[seq] = (reason, detail)
        return True


def find_last_root(log) -> Optional[int]:
    records = log.records if isinstance(log, TraceLog) else log
    for r in reversed(records):
        if classify(r.fn) == RoleTag.FrameRoot:
            return r.seq
    return None


def resolve_selectors(log, up_to: Optional[int]) -> list:
    """Annotate every call at or before ``up_to`` with its category and owner."""
    records = log.records if isinstance(log, TraceLog) else log
    ctx = SelectorContext()
    out = []
    for r in records:
        a = Annotated(r)
        if up_to is not None and r.seq <= up_to:
            role = classify(r.fn)
            if role in (RoleTag.StateSet, RoleTag.SelectorBind):
                a.key = category_key(r, ctx)
            if r.fn in TARGET_ADDRESSED:
                vid, sel = resolve_owner(r, ctx)
                a.owner = IdRef(TARGET_ADDRESSED[r.fn], vid)
                a.selector = sel
                a.unresolved = sel is None
            elif r.fn == F.LoadMatrix:
                a.selector = ctx.matrix_mode_at[1]
        ctx.observe(r)
        out.append(a)
    return out


def compute_live_set(annotated: list, up_to: Optional[int]) -> LiveSet:
    live = LiveSet()
    if up_to is None:
        for a in annotated:
            live.add(a.record.seq, "NoRoot")
        return live

    records = [a.record for a in annotated]
    index = {r.seq: i for i, r in enumerate(records)}
    upi = index[up_to]

    # Window: everything after the last context reset/destroy before the root.
    lo = 0
    ctx_index = None
    for i in range(upi, -1, -1):
        fn = records[i].fn
        if fn in (F.ResetContext, F.DestroyContext) and lo == 0:
            lo = i + 1
        if fn == F.CreateContext and ctx_index is None:
            ctx_index = i
        if lo and ctx_index is not None:
            break

    gen_at = {}                          # (kind, vid) -> index of creating call
    del_at = {}                          # (kind, vid) -> index of deleting call
    lifecycle = defaultdict(list)        # (kind, vid) -> lifecycle step indices
    binds = defaultdict(list)            # (kind, target) -> bind call indices
    bind_vid = {}                        # bind index -> bound vid
    cleared = {}                         # (delete index, kind, target) -> bind index it undid
    current = {}                         # (kind, target) -> (vid, event index, "bind"|"delete")
    last_of_key = {}
    last_matrix_mode = last_use_program = None

    for i in range(lo, upi + 1):
        a = annotated[i]
        r = a.record
        role = classify(r.fn)
        if role == RoleTag.ResourceGen and r.fn != F.CreateContext:
            for kind, vid in r.returned_ids:
                gen_at[(kind, vid)] = i
        elif role == RoleTag.ResourceDelete:
            for ref in r.args:
                del_at[(ref.kind, ref.vid)] = i
            kind = _DELETE_KIND.get(r.fn)
            if kind is not None:
                dead = {ref.vid for ref in r.args}
                for (k, target), (vid, ev, _) in list(current.items()):
                    if k == kind and vid in dead:
                        cleared[(i, kind, target)] = ev
                        current[(k, target)] = (0, i, "delete")
        elif role == RoleTag.LifecycleStep:
            ref = r.args[_LIFECYCLE_OWNER[r.fn]]
            lifecycle[(ref.kind, ref.vid)].append(i)
        elif r.fn in _BIND_KIND:
            slot = (_BIND_KIND[r.fn], r.args[0].name)
            binds[slot].append(i)
            bind_vid[i] = r.args[1].vid
            current[slot] = (r.args[1].vid, i, "bind")
        elif r.fn == F.MatrixMode:
            last_matrix_mode = i
        elif r.fn == F.UseProgram:
            last_use_program = i
        if role == RoleTag.StateSet:
            last_of_key[a.key] = i

    def is_live(kind, vid):
        return vid == 0 or ((kind, vid) in gen_at and (kind, vid) not in del_at)

    work = []

    def keep(i, reason, detail=None):
        if live.add(records[i].seq, reason, detail):
            work.append(i)

    # -- seeds ---------------------------------------------------------------
    if ctx_index is not None:
        keep(ctx_index, "Context")
    keep(upi, "FinalRoot")
    for i in range(upi + 1, len(records)):
        live.add(records[i].seq, "SuffixAfterRoot")
    for key, i in last_of_key.items():
        owner = annotated[i].owner
        if owner is None or is_live(owner.kind, owner.vid):
            keep(i, "LastWriteOf", key)
    if last_matrix_mode is not None:
        keep(last_matrix_mode, "CurrentBinding", "matrixMode")
    if last_use_program is not None:
        prog = records[last_use_program].args[0]
        if is_live(prog.kind, prog.vid):
            keep(last_use_program, "CurrentBinding", "useProgram")

    readers = []            # (position, kind, target, delete index) for delete-cleared bindings
    for (kind, target), (vid, ev, how) in current.items():
        if how == "bind":
            keep(ev, "CurrentBinding", (kind, target))
        else:
            readers.append((upi + 1, kind, target, ev))
    for (kind, vid), i in gen_at.items():
        if (kind, vid) not in del_at:
            keep(i, "GenOf", (kind, vid))
            for j in lifecycle.get((kind, vid), ()):
                keep(j, "LifecycleOf", (kind, vid))

    # -- closure ---------------------------------------------------------------
    def drain():
        while work:
            i = work.pop()
            a = annotated[i]
            r = a.record
            if r.fn in TARGET_ADDRESSED and a.selector is not None:
                j = index[a.selector]
                if records[j].fn in _BIND_KIND:
                    keep(j, "SelectorFor", r.seq)
                else:
                    readers.append((i, a.owner.kind, r.args[0].name, j))
            elif r.fn == F.LoadMatrix and a.selector is not None:
                keep(index[a.selector], "SelectorFor", r.seq)
            for ref in r.args:
                if isinstance(ref, IdRef) and ref.vid and ref.kind != K.Context:
                    g = gen_at.get((ref.kind, ref.vid))
                    if g is not None:
                        keep(g, "GenOf", (ref.kind, ref.vid))
            if classify(r.fn) == RoleTag.ResourceGen:
                for kind, vid in r.returned_ids:
                    if (kind, vid) in del_at:
                        keep(del_at[(kind, vid)], "DeleteOf", (kind, vid))
                    for j in lifecycle.get((kind, vid), ()):
                        if kind == K.Shader or (kind, vid) not in del_at:
                            keep(j, "LifecycleOf", (kind, vid))

    drain()
    changed = True
    while changed:
        changed = False
        for pos, kind, target, d in list(readers):
            slot = binds[(kind, target)]
            k = bisect.bisect_left(slot, pos) - 1
            while k >= 0 and records[slot[k]].seq not in live.keep:
                k -= 1
            if k >= 0 and bind_vid[slot[k]] != 0:
                b = cleared[(d, kind, target)]
                for idx, reason in ((b, "ClearedBinding"), (d, "ClearedBinding")):
                    if records[idx].seq not in live.keep:
                        keep(idx, reason, (kind, target))
                        changed = True
        drain()
    return live


def prune(log: TraceLog) -> TraceLog:
    up_to = find_last_root(log)
    if up_to is None:
        return log.copy()
    live = compute_live_set(resolve_selectors(log, up_to), up_to)
    return log.with_records(r for r in log.records if r.seq in live.keep)


def size_bound(log: TraceLog) -> int:
    """Upper bound on ``len(prune(log))`` from the log's shape.

    Counts live category keys (twice: a kept owner-addressed write can keep its
    own bind), two calls per live object, lifecycle steps of shaders and
    programs, the suffix and a small constant.
    """
    up_to = find_last_root(log)
    if up_to is None:
        return len(log)
    annotated = resolve_selectors(log, up_to)
    live_keys = set()
    objects = {}
    lifecycle_steps = 0
    deleted = set()
    suffix = 0
    for a in annotated:
        r = a.record
        if r.seq > up_to:
            suffix += 1
            continue
        role = classify(r.fn)
        if r.fn in (F.ResetContext, F.DestroyContext):
            live_keys.clear()
            objects.clear()
            lifecycle_steps = 0
        if role == RoleTag.StateSet and a.key is not None:
            live_keys.add(a.key)
        elif role == RoleTag.ResourceGen:
            for kv in r.returned_ids:
                objects[kv] = True
        elif role == RoleTag.ResourceDelete:
            for ref in r.args:
                deleted.add((ref.kind, ref.vid))
        elif role == RoleTag.LifecycleStep:
            lifecycle_steps += 1
    live_objects = sum(1 for kv in objects if kv not in deleted)
    dead_objects = sum(1 for kv in objects if kv in deleted)
    return (2 * len(live_keys) + 2 * live_objects + 3 * dead_objects
            + lifecycle_steps + suffix + 8)
