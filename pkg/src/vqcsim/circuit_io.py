"""Line-oriented text format for circuits (see docs/formats.md).

::

    # comment
    GATE H 1
    GATE CNOT 1,2
    GATE Rx 2 0.25 1
    GATE FSIM 1,2 0.1,0.2,0,0,0 1,1,0,0,0
    GATE Generic 1 0j,1+0j,1+0j,0j
    CHANNEL Depolarizing 3 0.01

Nested circuits are written flattened.
"""
from __future__ import annotations

import numpy as np

from .circuit import Circuit
from .errors import ShapeError
from .gates import (CHANNEL_KINDS, GENERIC, PARAMETRIC_KINDS, STANDARD_KINDS, ChannelOp, GateOp,
                    make_gate, parametric_gate, standard_channel, standard_gate)


def _fmt_complex(z: complex) -> str:
    return repr(complex(z)).strip("()")


def _fmt_floats(vals) -> str:
    return ",".join(repr(float(v)) for v in vals)


def format_circuit(c: Circuit) -> str:
    lines = []
    for op in c.operations():
        pos = ",".join(str(p) for p in op.positions)
        if isinstance(op, ChannelOp):
            if op.kind not in CHANNEL_KINDS:
                raise ShapeError("only named channels have a text form")
            (value,) = op.noise_params.values()
            lines.append(f"CHANNEL {op.kind} {pos} {float(value)!r}")
        elif op.kind in PARAMETRIC_KINDS:
            flags = ",".join("1" if f else "0" for f in op.is_param)
            lines.append(f"GATE {op.kind} {pos} {_fmt_floats(op.params)} {flags}")
        elif op.kind in STANDARD_KINDS:
            lines.append(f"GATE {op.kind} {pos}")
        else:
            entries = ",".join(_fmt_complex(z) for z in op.matrix.ravel(order="F"))
            lines.append(f"GATE {GENERIC} {pos} {entries}")
    return "\n".join(lines) + "\n"


def _parse_gate(parts: list[str]) -> GateOp:
    kind, pos = parts[0], tuple(int(p) for p in parts[1].split(","))
    rest = parts[2:]
    if kind in PARAMETRIC_KINDS:
        if len(rest) not in (1, 2):
            raise ShapeError(f"{kind} needs params and optional is_param fields")
        params = [float(v) for v in rest[0].split(",")]
        flags = [v.strip().lower() in ("1", "true") for v in rest[1].split(",")] if len(rest) == 2 else False
        return parametric_gate(kind, pos, params, flags)
    if kind == GENERIC:
        if len(rest) != 1:
            raise ShapeError("Generic gates need one field of matrix entries")
        vals = np.array([complex(v) for v in rest[0].split(",")])
        dim = 1 << len(pos)
        if vals.size != dim * dim:
            raise ShapeError(f"expected {dim * dim} matrix entries, got {vals.size}")
        return make_gate(pos, vals.reshape(dim, dim, order="F"))
    if rest:
        raise ShapeError(f"{kind} takes no parameters")
    return standard_gate(kind, pos)


def parse_circuit(text: str) -> Circuit:
    c = Circuit()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        try:
            if parts[0] == "GATE" and len(parts) >= 3:
                c.append(_parse_gate(parts[1:]))
            elif parts[0] == "CHANNEL" and len(parts) == 4:
                c.append(standard_channel(parts[1], int(parts[2]), float(parts[3])))
            else:
                raise ShapeError("expected 'GATE kind positions [params] [is_param]' "
                                 "or 'CHANNEL kind pos param'")
        except (ValueError, IndexError) as exc:
            raise type(exc)(f"line {lineno}: {exc}") from None
    return c


def read_circuit(path) -> Circuit:
    with open(path) as fh:
        return parse_circuit(fh.read())


def write_circuit(path, c: Circuit) -> None:
    with open(path, "w") as fh:
        fh.write(format_circuit(c))
