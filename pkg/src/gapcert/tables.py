"""Coefficient-table ingestion: exact parsing, schema checks, digests.

The table file carries the polynomial data driving every construction:

* q1, q2      - degree-11 reciprocal-soliton polynomials;
* q3, q4      - degree-13 Green-system polynomials, three pieces each,
                used with arguments 3r, r - 1/2, r - 2 on the pieces;
* c           - interior quasi-solution for the plus operator (rows l,
                columns k: coefficient of lambda^k z^l per piece);
* d_plus/e_plus, d_minus/e_minus - quasi-basis pairs for both operators.

All entries are canonical 'p/q' rationals; anything else is rejected.
Pieces are converted once to the global radial variable (exact affine
substitution), which is the representation the builders consume.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from importlib import resources

from gmpy2 import mpq

from .errors import ParseError, SchemaMismatch, TableMissing
from .exactnum import Q, qstr
from .polyring import AffineMap, BiPoly, Poly


@dataclass
class TablePiece:
    lo: object
    hi: object
    local: BiPoly          # in (k = spectral power, l = local z power)
    z_scale: object
    z_offset: object
    global_r: BiPoly       # same polynomial re-expanded in the global variable

    @property
    def interval(self):
        return (self.lo, self.hi)


@dataclass
class CoefficientTables:
    q1: Poly
    q2: Poly
    q3: dict
    q4: dict
    c: list
    d_plus: list
    e_plus: list
    d_minus: list
    e_minus: list
    digest: str = ""
    raw: dict = field(default_factory=dict)

    def family(self, name: str):
        if not hasattr(self, name):
            raise TableMissing(name)
        return getattr(self, name)


def _parse_entry(text) -> mpq:
    from .exactnum import parse_q

    return parse_q(str(text))


def _parse_poly(seq) -> Poly:
    return Poly([_parse_entry(v) for v in seq])


def _parse_piece(piece: dict) -> TablePiece:
    try:
        lo, hi = _parse_entry(piece["interval"][0]), _parse_entry(piece["interval"][1])
        scale, offset = _parse_entry(piece["z_scale"]), _parse_entry(piece["z_offset"])
        rows = piece["rows"]
    except (KeyError, IndexError) as exc:
        raise SchemaMismatch(f"piece missing field: {exc}") from exc
    coeffs = {}
    width = None
    for l, line in enumerate(rows):
        if width is None:
            width = len(line)
        elif len(line) != width:
            raise SchemaMismatch(f"ragged row {l}")
        for k, v in enumerate(line):
            val = _parse_entry(v)
            if val != 0:
                coeffs[(k, l)] = val
    local = BiPoly(coeffs)
    if local.v_degree() > 15 or local.u_degree() > 15:
        raise SchemaMismatch("degree beyond the supported shape")
    # global substitution: z = offset + scale * r (exact)
    glob = local.compose_affine_v(AffineMap(offset, scale))
    return TablePiece(lo, hi, local, scale, offset, glob)


def load_tables(path=None) -> CoefficientTables:
    """Load the table file (packaged data by default) with digest recording."""
    if path is None:
        blob = resources.files("gapcert").joinpath("data/tables.json").read_bytes()
    else:
        with open(path, "rb") as fh:
            blob = fh.read()
    digest = hashlib.sha256(blob).hexdigest()
    try:
        doc = json.loads(blob)
    except json.JSONDecodeError as exc:
        raise ParseError(str(exc)) from exc
    if doc.get("schema") != "gapcert-tables-v1":
        raise SchemaMismatch(f"unknown schema {doc.get('schema')!r}")
    t = doc["tables"]
    try:
        out = CoefficientTables(
            q1=_parse_poly(t["q1"]),
            q2=_parse_poly(t["q2"]),
            q3={j: _parse_poly(t["q3"][j]) for j in ("J1", "J2", "J3")},
            q4={j: _parse_poly(t["q4"][j]) for j in ("J1", "J2", "J3")},
            c=[_parse_piece(p) for p in t["c"]["pieces"]],
            d_plus=[_parse_piece(p) for p in t["d_plus"]["pieces"]],
            e_plus=[_parse_piece(p) for p in t["e_plus"]["pieces"]],
            d_minus=[_parse_piece(p) for p in t["d_minus"]["pieces"]],
            e_minus=[_parse_piece(p) for p in t["e_minus"]["pieces"]],
            digest=digest,
            raw=doc,
        )
    except KeyError as exc:
        raise TableMissing(str(exc)) from exc
    _sanity(out)
    return out


def _sanity(tab: CoefficientTables):
    if tab.q1.degree != 11 or tab.q2.degree != 11:
        raise SchemaMismatch("q1/q2 must have degree 11")
    if tab.q1[1] != 0:
        raise SchemaMismatch("q1 must have no linear term")
    for fam in (tab.c, tab.d_plus, tab.e_plus, tab.d_minus, tab.e_minus):
        if len(fam) != 3:
            raise SchemaMismatch("each family has exactly three pieces")
        for a, b in zip(fam, fam[1:]):
            if a.hi != b.lo:
                raise SchemaMismatch("piece intervals must be contiguous")


def mutate_tables(path_or_none, family: str, location, delta) -> CoefficientTables:
    """Reload tables with one coefficient shifted (mutation-sensitivity probes).

    `location` addresses the entry: for q-families an index (or (piece, index));
    for bivariate families a (piece, l, k) triple.
    """
    if path_or_none is None:
        blob = resources.files("gapcert").joinpath("data/tables.json").read_bytes()
    else:
        with open(path_or_none, "rb") as fh:
            blob = fh.read()
    doc = json.loads(blob)
    t = doc["tables"]
    delta = Q(delta)
    if family in ("q1", "q2"):
        idx = int(location)
        t[family][idx] = qstr(_parse_entry(t[family][idx]) + delta)
    elif family in ("q3", "q4"):
        piece, idx = location
        t[family][piece][int(idx)] = qstr(_parse_entry(t[family][piece][int(idx)]) + delta)
    else:
        piece, l, k = location
        cell = t[family]["pieces"][int(piece)]["rows"][int(l)][int(k)]
        t[family]["pieces"][int(piece)]["rows"][int(l)][int(k)] = qstr(_parse_entry(cell) + delta)
    blob2 = json.dumps(doc, indent=1, sort_keys=True).encode()
    import tempfile

    with tempfile.NamedTemporaryFile("wb", suffix=".json", delete=False) as fh:
        fh.write(blob2)
        name = fh.name
    return load_tables(name)
