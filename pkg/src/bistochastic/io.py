"""Channel/state files, report JSON and orbit CSV.

Channel files look like::

    {"dim": 2, "kraus": [[[[1, 0], [0, 0]], [[0, 0], [1, 0]]]]}

i.e. a list of N×N matrices whose entries are ``[re, im]`` pairs. State
files use the key ``"state"`` with a single matrix. Floats are written with
17 significant digits so that save → load → save is byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from pathlib import Path

import numpy as np

from .channel import KrausChannel
from .errors import ChannelError, InvalidInput, InvariantViolation
from .matrix import DEFAULT_TOL, Tolerances, check_density


class ParseError(InvalidInput):
    pass


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if s == "-0":
        s = "0"
    return s


def to_jsonable(obj):
    """Plain JSON-ready structure; complex numbers become ``[re, im]``."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj) if f.repr}
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int | None = 2) -> str:
    """Deterministic JSON text with 17-significant-digit floats."""
    return _render(to_jsonable(obj), indent, 0) + "\n"


def _render(x, indent, level) -> str:
    if isinstance(x, bool) or x is None or isinstance(x, str):
        return json.dumps(x, ensure_ascii=False)
    if isinstance(x, int):
        return str(x)
    if isinstance(x, float):
        return _fmt_float(x)
    if isinstance(x, dict):
        items = [f"{json.dumps(k, ensure_ascii=False)}: {_render(v, indent, level + 1)}" for k, v in x.items()]
        return _join(items, "{", "}", indent, level)
    if isinstance(x, list):
        flat = all(not isinstance(v, (dict, list)) for v in x)
        if flat or all(isinstance(v, list) and all(not isinstance(w, (dict, list)) for w in v) for v in x):
            return "[" + ", ".join(_render(v, None, 0) for v in x) + "]"
        return _join([_render(v, indent, level + 1) for v in x], "[", "]", indent, level)
    raise TypeError(f"cannot render {type(x).__name__}")


def _join(items, open_, close, indent, level):
    if not items:
        return open_ + close
    if indent is None:
        return open_ + ", ".join(items) + close
    pad = " " * (indent * (level + 1))
    return open_ + "\n" + ",\n".join(pad + it for it in items) + "\n" + " " * (indent * level) + close


def encode_matrix(m: np.ndarray):
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m, dtype=complex)]


def decode_matrix(data, n: int, where: str) -> np.ndarray:
    if not isinstance(data, list) or len(data) != n:
        raise ParseError(f"{where}: expected a list of {n} rows")
    out = np.empty((n, n), dtype=complex)
    for i, row in enumerate(data):
        if not isinstance(row, list) or len(row) != n:
            raise ParseError(f"{where}[{i}]: expected a row of {n} entries")
        for j, z in enumerate(row):
            if (not isinstance(z, list) or len(z) != 2
                    or not all(isinstance(t, (int, float)) and not isinstance(t, bool) for t in z)):
                raise ParseError(f"{where}[{i}][{j}]: expected [re, im]")
            out[i, j] = complex(z[0], z[1])
    if not np.all(np.isfinite(out)):
        raise ParseError(f"{where}: non-finite entry")
    return out


def channel_to_dict(ch: KrausChannel) -> dict:
    return {"dim": ch.dim, "kraus": [encode_matrix(v) for v in ch.kraus]}


def dump_channel(ch: KrausChannel) -> str:
    d = channel_to_dict(ch)
    ops = ",\n".join("    " + _render(op, None, 0) for op in d["kraus"])
    return '{\n  "dim": %d,\n  "kraus": [\n%s\n  ]\n}\n' % (d["dim"], ops)


def _load_json(text: str, source: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{source}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc


def _read_dim(data, source):
    if not isinstance(data, dict):
        raise ParseError(f"{source}: top level must be an object")
    n = data.get("dim")
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise ParseError(f"{source}: field 'dim' must be a positive integer")
    return n


def parse_channel(text: str, source: str = "<channel>", tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    data = _load_json(text, source)
    n = _read_dim(data, source)
    ops = data.get("kraus")
    if not isinstance(ops, list) or not ops:
        raise ParseError(f"{source}: field 'kraus' must be a nonempty list of matrices")
    mats = [decode_matrix(op, n, f"{source}: kraus[{i}]") for i, op in enumerate(ops)]
    return KrausChannel(mats, tol=tol)


def load_channel(path, tol: Tolerances = DEFAULT_TOL) -> KrausChannel:
    """Read and validate a channel file; non-CPTP input raises :class:`ChannelError`."""
    from .channel import certify

    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc.strerror}") from exc
    ch = parse_channel(text, str(path), tol)
    cert = certify(ch, tol)
    if not cert.is_cptp:
        raise ChannelError(f"{path}: Choi matrix not positive (min eigenvalue {cert.choi_min_eigenvalue:.3e})",
                           residual=-cert.choi_min_eigenvalue)
    return ch


def save_channel(ch: KrausChannel, path) -> None:
    Path(path).write_text(dump_channel(ch), encoding="utf-8")


def dump_state(rho) -> str:
    rho = np.asarray(rho, dtype=complex)
    return dumps({"dim": rho.shape[0], "state": encode_matrix(rho)})


def load_state(path, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InvalidInput(f"{path}: {exc.strerror}") from exc
    data = _load_json(text, str(path))
    n = _read_dim(data, str(path))
    rho = decode_matrix(data.get("state"), n, f"{path}: state")
    try:
        return check_density(rho, tol)
    except InvariantViolation as exc:
        raise InvalidInput(f"{path}: {exc}") from exc


ORBIT_COLUMNS = ("n", "trace_dist", "hs_dist_sq", "entropy", "delta_S")


def orbit_csv(log) -> str:
    columns = ORBIT_COLUMNS + (("r1", "r2", "r3") if log.dim == 2 else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in log.rows():
        # adding 0.0 turns -0.0 into 0.0
        writer.writerow([row[c] if c == "n" else repr(float(row[c]) + 0.0) for c in columns])
    return buf.getvalue()
