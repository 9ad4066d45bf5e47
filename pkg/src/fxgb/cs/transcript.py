"""Append-only constraint transcript over F_p and its verifier.

A transcript is a list of wire values together with constraints over them:

* ``Linear``  sum(c_j * w_j) + const = 0
* ``Mul``     a * b = c
* ``Lookup``  w is a member of the canonical table ``[0, 2**width)``
* ``Equal``   w = const

Verification replays every constraint directly and additionally folds all
multiplication residues into one random linear combination, mirroring the
batched check an interactive verifier would run.
"""

from __future__ import annotations

import bisect
import hashlib
import io
import json
import struct
from collections import Counter
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from ..errors import FormatError
from ..field import GAP, P, GadgetParams, in_gap, to_signed

LIN, MUL, LOOKUP, EQUAL = 0, 1, 2, 3
KIND_NAMES = {LIN: "linear", MUL: "mul", LOOKUP: "lookup", EQUAL: "equal"}

# Wire kinds. Hints (inverses, product chains) are unconstrained in size;
# differences feed MSB proofs and may span twice the gap window.
VALUE, HINT, DIFF = 0, 1, 2

MAGIC = b"FXGBTRNS"
VERSION = 1


class Transcript:
    def __init__(
        self,
        params: GadgetParams | None = None,
        frac_bits: int = 20,
        statement: bytes = bytes(32),
        meta: dict | None = None,
    ) -> None:
        if len(statement) != 32:
            raise ValueError("statement digest must be 32 bytes")
        self.params = params or GadgetParams()
        self.frac_bits = frac_bits
        self.statement = bytes(statement)
        self.meta = dict(meta or {})
        self.values: list[int] = []
        self.kinds = bytearray()
        self.constraints: list[tuple] = []
        self.sections: list[str] = ["main"]
        self._section = 0
        self._consts: dict[int, int] = {}
        self.tables: dict[int, list[int]] = {}
        # When set, gadgets refuse (raise) instead of emitting a witness that
        # is known to violate a static bound.
        self.strict = False

    # -- construction ----------------------------------------------------------------

    @contextmanager
    def section(self, name: str):
        prev = self._section
        if name not in self.sections:
            self.sections.append(name)
        self._section = self.sections.index(name)
        try:
            yield self
        finally:
            self._section = prev

    def new(self, value: int, hint: bool = False, kind: int | None = None) -> int:
        self.values.append(value % P)
        self.kinds.append(kind if kind is not None else HINT if hint else VALUE)
        return len(self.values) - 1

    def val(self, wire: int) -> int:
        return self.values[wire]

    def const(self, c: int) -> int:
        c %= P
        wire = self._consts.get(c)
        if wire is None:
            wire = self.new(c)
            self.constraints.append((EQUAL, self._section, wire, c))
            self._consts[c] = wire
        return wire

    def assert_lin(self, terms, const: int = 0) -> None:
        terms = tuple((c % P, w) for c, w in terms)
        self.constraints.append((LIN, self._section, terms, const % P))

    def lin(self, terms, const: int = 0, kind: int = VALUE) -> int:
        """New wire equal to ``sum(c * w) + const``."""
        terms = list(terms)
        v = const
        for c, w in terms:
            v += c * self.values[w]
        out = self.new(v, kind=kind)
        terms.append((-1, out))
        self.assert_lin(terms, const)
        return out

    def assert_mul(self, a: int, b: int, c: int) -> None:
        self.constraints.append((MUL, self._section, a, b, c))

    def mul(self, a: int, b: int, value: int | None = None, hint: bool = False) -> int:
        v = self.values[a] * self.values[b] if value is None else value
        out = self.new(v, hint)
        self.assert_mul(a, b, out)
        return out

    def lookup(self, wire: int, width: int) -> None:
        if not 1 <= width <= self.params.d:
            raise ValueError(f"lookup width {width} outside [1, {self.params.d}]")
        if width not in self.tables:
            self.tables[width] = list(range(1 << width))
        self.constraints.append((LOOKUP, self._section, width, wire))

    def assert_equal(self, wire: int, c: int) -> None:
        self.constraints.append((EQUAL, self._section, wire, c % P))

    # -- introspection ---------------------------------------------------------------

    @property
    def n_wires(self) -> int:
        return len(self.values)

    def counts_by_section(self) -> Counter:
        return Counter(self.sections[c[1]] for c in self.constraints)

    def counts_by_kind(self) -> Counter:
        return Counter(KIND_NAMES[c[0]] for c in self.constraints)

    def copy(self) -> "Transcript":
        out = Transcript(self.params, self.frac_bits, self.statement, self.meta)
        out.values = list(self.values)
        out.kinds = bytearray(self.kinds)
        out.constraints = list(self.constraints)
        out.sections = list(self.sections)
        out.tables = {k: list(v) for k, v in self.tables.items()}
        return out


# -- verification ----------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyResult:
    ok: bool
    constraint: int | None = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


def mul_residues(tr: Transcript) -> list[int]:
    v = tr.values
    return [(v[c[2]] * v[c[3]] - v[c[4]]) % P for c in tr.constraints if c[0] == MUL]


def aggregate(residues: list[int], challenge: int) -> int:
    """sum_{j>=1} chi^j * residues[j-1] mod p; zero residues contribute nothing."""
    chi = challenge % P
    if chi == 0:
        raise ValueError("challenge must be a nonzero field element")
    return sum(r * pow(chi, j, P) for j, r in enumerate(residues, start=1) if r) % P


def batched_mul_check(tr: Transcript, challenge: int) -> bool:
    """Random-linear-combination test sum_{j>=1} chi^j (a_j b_j - c_j) == 0."""
    return aggregate(mul_residues(tr), challenge) == 0


def _canonical_tables(tr: Transcript) -> bool:
    return all(vals == list(range(1 << w)) for w, vals in tr.tables.items())


def verify_transcript(tr: Transcript, challenge: int, expected_statement: bytes | None = None) -> VerifyResult:
    if expected_statement is not None and bytes(expected_statement) != tr.statement:
        return VerifyResult(False, None, "statement digest mismatch")
    if not _canonical_tables(tr):
        return VerifyResult(False, None, "non-canonical lookup table")
    v = tr.values
    n = len(v)
    for idx, c in enumerate(tr.constraints):
        kind = c[0]
        try:
            if kind == MUL:
                ok = v[c[2]] * v[c[3]] % P == v[c[4]]
            elif kind == LIN:
                ok = (sum(coef * v[w] for coef, w in c[2]) + c[3]) % P == 0
            elif kind == EQUAL:
                ok = v[c[2]] == c[3]
            elif kind == LOOKUP:
                table = tr.tables.get(c[2])
                x = v[c[3]]
                pos = bisect.bisect_left(table, x) if table is not None else 0
                ok = table is not None and pos < len(table) and table[pos] == x
            else:
                ok = False
        except IndexError:
            ok = False
        if not ok:
            return VerifyResult(False, idx, f"{KIND_NAMES.get(kind, 'unknown')} constraint violated")
    if any(not 0 <= x < P for x in v) or n != len(tr.kinds):
        return VerifyResult(False, None, "malformed wire table")
    if not batched_mul_check(tr, challenge):
        return VerifyResult(False, None, "batched multiplication check failed")
    return VerifyResult(True)


def gap_violations(tr: Transcript) -> list[int]:
    """Wires outside the window their kind allows.

    Value wires must be gap-range encodings; comparison differences must be
    the difference of two such encodings, i.e. within twice the window.
    """
    out = []
    for i, (x, k) in enumerate(zip(tr.values, tr.kinds)):
        if k == VALUE and not in_gap(x):
            out.append(i)
        elif k == DIFF and abs(to_signed(x)) > 2 * GAP:
            out.append(i)
    return out


# -- binary format ---------------------------------------------------------------------


def _pack_bytes(out: io.BytesIO, data: bytes) -> None:
    out.write(struct.pack("<I", len(data)))
    out.write(data)


def dumps(tr: Transcript) -> bytes:
    out = io.BytesIO()
    out.write(MAGIC)
    gp = tr.params
    out.write(struct.pack("<HQBBQQB", VERSION, P, gp.d, gp.t, gp.m_d, gp.m_q, tr.frac_bits))
    out.write(tr.statement)
    _pack_bytes(out, json.dumps(tr.meta, sort_keys=True, separators=(",", ":")).encode())
    out.write(struct.pack("<H", len(tr.sections)))
    for name in tr.sections:
        _pack_bytes(out, name.encode())
    out.write(struct.pack("<Q", len(tr.values)))
    out.write(np.array(tr.values, dtype="<u8").tobytes())
    out.write(bytes(tr.kinds))
    out.write(struct.pack("<Q", len(tr.constraints)))
    for c in tr.constraints:
        kind, sec = c[0], c[1]
        out.write(struct.pack("<BH", kind, sec))
        if kind == LIN:
            out.write(struct.pack("<I", len(c[2])))
            for coef, w in c[2]:
                out.write(struct.pack("<QI", coef, w))
            out.write(struct.pack("<Q", c[3]))
        elif kind == MUL:
            out.write(struct.pack("<III", c[2], c[3], c[4]))
        elif kind == LOOKUP:
            out.write(struct.pack("<BI", c[2], c[3]))
        else:
            out.write(struct.pack("<IQ", c[2], c[3]))
    out.write(struct.pack("<H", len(tr.tables)))
    for width in sorted(tr.tables):
        vals = tr.tables[width]
        out.write(struct.pack("<BQ", width, len(vals)))
        out.write(np.array(vals, dtype="<u8").tobytes())
    body = out.getvalue()
    return body + hashlib.sha256(body).digest()


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated transcript")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        return struct.unpack(fmt, self.take(struct.calcsize(fmt)))

    def blob(self) -> bytes:
        (n,) = self.unpack("<I")
        return self.take(n)


def loads(data: bytes) -> Transcript:
    if len(data) < 32 or hashlib.sha256(data[:-32]).digest() != data[-32:]:
        raise FormatError("transcript checksum mismatch")
    rd = _Reader(data[:-32])
    if rd.take(len(MAGIC)) != MAGIC:
        raise FormatError("not a transcript file")
    version, p, d, t, m_d, m_q, frac_bits = rd.unpack("<HQBBQQB")
    if version != VERSION or p != P:
        raise FormatError(f"unsupported transcript version {version} or modulus {p}")
    try:
        params = GadgetParams(d, t, m_d, m_q)
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    statement = rd.take(32)
    meta = json.loads(rd.blob().decode())
    tr = Transcript(params, frac_bits, statement, meta)
    (n_sec,) = rd.unpack("<H")
    tr.sections = [rd.blob().decode() for _ in range(n_sec)]
    (n_wires,) = rd.unpack("<Q")
    tr.values = np.frombuffer(rd.take(8 * n_wires), dtype="<u8").astype(object).tolist()
    tr.kinds = bytearray(rd.take(n_wires))
    (n_cons,) = rd.unpack("<Q")
    cons = []
    for _ in range(n_cons):
        kind, sec = rd.unpack("<BH")
        if kind == LIN:
            (k,) = rd.unpack("<I")
            flat = struct.unpack("<" + "QI" * k, rd.take(12 * k))
            terms = tuple(zip(flat[0::2], flat[1::2]))
            (const,) = rd.unpack("<Q")
            cons.append((LIN, sec, terms, const))
        elif kind == MUL:
            cons.append((MUL, sec, *rd.unpack("<III")))
        elif kind == LOOKUP:
            cons.append((LOOKUP, sec, *rd.unpack("<BI")))
        elif kind == EQUAL:
            cons.append((EQUAL, sec, *rd.unpack("<IQ")))
        else:
            raise FormatError(f"unknown constraint kind {kind}")
    tr.constraints = cons
    (n_tab,) = rd.unpack("<H")
    for _ in range(n_tab):
        width, length = rd.unpack("<BQ")
        tr.tables[width] = np.frombuffer(rd.take(8 * length), dtype="<u8").astype(object).tolist()
    if rd.pos != len(rd.data):
        raise FormatError("trailing bytes after transcript body")
    return tr
