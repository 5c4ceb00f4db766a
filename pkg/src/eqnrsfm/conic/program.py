"""Conic program IR: blocks, equality rows, reformulations, serialization.

A program minimizes a sum of :class:`LinearFunctional` terms subject to
equality rows (each a functional combination = rhs) and cone membership of
its matrix/scalar variables:

* PSD blocks (symmetric positive semidefinite matrices, by id),
* SOC blocks (second-order cone vectors, by id; component k is addressed as
  entry (k, k)),
* ``nonneg`` scalars and ``free`` scalars (addressed as (i, i) on the
  reserved block ids "nonneg"/"free").

``vectorize`` lowers the program to the standard form min c.x, Ax = b,
x in F x R+ x (svec'd PSD blocks); SOC blocks are first replaced exactly by
arrow-matrix PSD blocks ([[x0, x1..],[x1, x0 I]] >= 0  iff  x0 >= ||x1||).
The svec convention is row-major upper triangle with off-diagonals scaled
by sqrt(2), so Euclidean inner products of svec vectors equal trace inner
products of the matrices.

The text export (format "conicir 1") writes the canonicalized program:
block table, objective triplets, then one triplet group per equality row.
Floats are written with repr() so a round-trip is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ..lifting import LinearFunctional

RESERVED_IDS = ("free", "nonneg")


def scalar_functional(block: str, index: int, coeff: float = 1.0, constant: float = 0.0) -> LinearFunctional:
    """Functional reading one scalar variable (free/nonneg) or diag entry."""
    return LinearFunctional(block, [(index, index, float(coeff))], float(constant))


@dataclass
class EqRow:
    terms: list[LinearFunctional]
    rhs: float
    label: str = ""


class ConicProgram:
    """Minimization problem over symmetric-cone variables (see module doc)."""

    def __init__(self) -> None:
        self.psd_blocks: list[tuple[str, int]] = []
        self.soc_blocks: list[tuple[str, int]] = []
        self.n_nonneg = 0
        self.n_free = 0
        self.objective: list[LinearFunctional] = []
        self.eq_rows: list[EqRow] = []

    # -- declaration -------------------------------------------------------

    def _check_new_id(self, block_id: str) -> None:
        if block_id in RESERVED_IDS:
            raise ValueError(f"block id {block_id!r} is reserved")
        if any(bid == block_id for bid, _ in self.psd_blocks + self.soc_blocks):
            raise ValueError(f"duplicate block id {block_id!r}")

    def add_psd_block(self, block_id: str, dim: int) -> str:
        if dim < 1:
            raise ValueError(f"PSD block dim must be positive, got {dim}")
        self._check_new_id(block_id)
        self.psd_blocks.append((block_id, int(dim)))
        return block_id

    def add_soc_block(self, block_id: str, dim: int) -> str:
        if dim < 2:
            raise ValueError(f"SOC block dim must be at least 2, got {dim}")
        self._check_new_id(block_id)
        self.soc_blocks.append((block_id, int(dim)))
        return block_id

    def add_nonneg(self, count: int = 1) -> int | list[int]:
        base = self.n_nonneg
        self.n_nonneg += count
        return base if count == 1 else list(range(base, base + count))

    def add_free(self, count: int = 1) -> int | list[int]:
        base = self.n_free
        self.n_free += count
        return base if count == 1 else list(range(base, base + count))

    def add_objective(self, f: LinearFunctional | list[LinearFunctional]) -> None:
        self.objective.extend([f] if isinstance(f, LinearFunctional) else list(f))

    def add_eq(
        self,
        terms: LinearFunctional | list[LinearFunctional],
        rhs: float,
        label: str = "",
    ) -> int:
        terms = [terms] if isinstance(terms, LinearFunctional) else list(terms)
        if not math.isfinite(rhs):
            raise ValueError(f"equality rhs must be finite, got {rhs}")
        self.eq_rows.append(EqRow(terms, float(rhs), label))
        return len(self.eq_rows) - 1

    def fix_entry(self, block: str, r: int, c: int, value: float, label: str = "") -> int:
        return self.add_eq(LinearFunctional(block, [(min(r, c), max(r, c), 1.0)]), value, label)

    # -- validation --------------------------------------------------------

    def block_dims(self) -> dict[str, int]:
        dims = {bid: d for bid, d in self.psd_blocks}
        dims.update({bid: d for bid, d in self.soc_blocks})
        dims["nonneg"] = self.n_nonneg
        dims["free"] = self.n_free
        return dims

    def _check_functional(self, f: LinearFunctional, dims: dict[str, int]) -> None:
        if f.block_id not in dims:
            raise ValueError(f"functional references unknown block {f.block_id!r}")
        d = dims[f.block_id]
        scalar = f.block_id in RESERVED_IDS or any(bid == f.block_id for bid, _ in self.soc_blocks)
        for r, c, v in f.entries:
            if not math.isfinite(v):
                raise ValueError(f"non-finite coefficient on block {f.block_id!r}")
            if scalar and r != c:
                raise ValueError(f"scalar/SOC block {f.block_id!r} takes (i, i) entries only")
            if not (0 <= min(r, c) and max(r, c) < d):
                raise ValueError(f"entry ({r},{c}) outside block {f.block_id!r} of dim {d}")

    def validate(self) -> None:
        dims = self.block_dims()
        for f in self.objective:
            self._check_functional(f, dims)
        for row in self.eq_rows:
            for f in row.terms:
                self._check_functional(f, dims)

    # -- canonical form ----------------------------------------------------

    def canonical(self) -> "ConicProgram":
        """Merge objective/row terms per block and fold constants into rhs."""
        self.validate()
        out = ConicProgram()
        out.psd_blocks = list(self.psd_blocks)
        out.soc_blocks = list(self.soc_blocks)
        out.n_nonneg = self.n_nonneg
        out.n_free = self.n_free
        terms, const = _merge_terms(self.objective)
        if const and terms:
            terms[0] = LinearFunctional(terms[0].block_id, terms[0].entries, const)
        elif const:
            terms = [LinearFunctional("free", [], const)]
        out.objective = terms
        for row in self.eq_rows:
            terms, const = _merge_terms(row.terms)
            out.eq_rows.append(EqRow(terms, row.rhs - const, row.label))
        return out

    def objective_constant(self) -> float:
        return float(sum(f.constant for f in self.objective))

    # -- SOC lowering ------------------------------------------------------

    def lower_socs(self) -> "ConicProgram":
        """Replace each SOC block by an equivalent arrow-matrix PSD block.

        Component k of a SOC block maps to arrow entry (0, k) (and (0, 0) for
        k = 0); structural rows pin the repeated diagonal and the zero
        off-diagonals of the lower-right subblock.
        """
        if not self.soc_blocks:
            return self
        src = self.canonical()
        out = ConicProgram()
        out.psd_blocks = list(src.psd_blocks)
        out.n_nonneg = src.n_nonneg
        out.n_free = src.n_free
        soc_dims = dict(src.soc_blocks)

        def arrow_id(bid: str) -> str:
            return f"socarrow:{bid}"

        for bid, d in src.soc_blocks:
            out.add_psd_block(arrow_id(bid), d)

        def remap(f: LinearFunctional) -> LinearFunctional:
            if f.block_id not in soc_dims:
                return f
            g = LinearFunctional(arrow_id(f.block_id), constant=f.constant)
            for k, _, v in f.entries:
                g.add(0, k, v)
            return g.merged()

        out.objective = [remap(f) for f in src.objective]
        for row in src.eq_rows:
            out.eq_rows.append(EqRow([remap(f) for f in row.terms], row.rhs, row.label))
        for bid, d in src.soc_blocks:
            aid = arrow_id(bid)
            for i in range(1, d):
                out.add_eq(
                    LinearFunctional(aid, [(0, 0, -1.0), (i, i, 1.0)]),
                    0.0,
                    f"soc-structure:{bid}:diag{i}",
                )
                for j in range(i + 1, d):
                    out.add_eq(LinearFunctional(aid, [(i, j, 1.0)]), 0.0, f"soc-structure:{bid}:zero{i},{j}")
        return out.canonical()

    # -- equality / comparison for round-trip tests ------------------------

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConicProgram):
            return NotImplemented
        a, b = self.canonical(), other.canonical()
        return (
            a.psd_blocks == b.psd_blocks
            and a.soc_blocks == b.soc_blocks
            and a.n_nonneg == b.n_nonneg
            and a.n_free == b.n_free
            and _dump_terms(a.objective) == _dump_terms(b.objective)
            and a.objective_constant() == b.objective_constant()
            and [(r.rhs, r.label, _dump_terms(r.terms)) for r in a.eq_rows]
            == [(r.rhs, r.label, _dump_terms(r.terms)) for r in b.eq_rows]
        )


def _merge_terms(terms: list[LinearFunctional]) -> tuple[list[LinearFunctional], float]:
    by_block: dict[str, LinearFunctional] = {}
    const = 0.0
    order: list[str] = []
    for f in terms:
        const += f.constant
        if f.block_id not in by_block:
            by_block[f.block_id] = LinearFunctional(f.block_id)
            order.append(f.block_id)
        for r, c, v in f.entries:
            by_block[f.block_id].add(r, c, v)
    merged = []
    for bid in order:
        m = by_block[bid].merged()
        if m.entries:
            merged.append(m)
    return merged, const


def _dump_terms(terms: list[LinearFunctional]):
    return sorted((f.block_id, tuple(f.entries)) for f in terms)


# ---------------------------------------------------------------------------
# reformulations
# ---------------------------------------------------------------------------


def add_abs_epigraph(
    prog: ConicProgram,
    f: LinearFunctional,
    g: LinearFunctional | None,
    weight: float,
    label: str = "abs",
) -> int:
    """Add weight * |f - g| to the objective via a nonnegative epigraph slack.

    Introduces u, v+, v- >= 0 with u - (f - g) = v+ and u + (f - g) = v-;
    returns the nonneg index of u.
    """
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    u = prog.add_nonneg()
    vp = prog.add_nonneg()
    vm = prog.add_nonneg()
    gterms_p = [g] if g is not None else []
    gterms_m = [g.scaled(-1.0)] if g is not None else []
    prog.add_eq(
        [scalar_functional("nonneg", u), f.scaled(-1.0), *gterms_p, scalar_functional("nonneg", vp, -1.0)],
        0.0,
        f"{label}:+",
    )
    prog.add_eq(
        [scalar_functional("nonneg", u), f, *gterms_m, scalar_functional("nonneg", vm, -1.0)],
        0.0,
        f"{label}:-",
    )
    prog.add_objective(scalar_functional("nonneg", u, weight))
    return u


def add_inverse_epigraph(
    prog: ConicProgram, diag_entry: tuple[str, int], weight: float, label: str = "inv"
) -> str:
    """Add weight * t with t >= 1/X[j,j] via the 2x2 PSD block [[t,1],[1,x]].

    Returns the id of the epigraph block; t is its (0,0) entry.
    """
    if weight < 0:
        raise ValueError(f"weight must be nonnegative, got {weight}")
    bid, j = diag_entry
    zid = f"{label}:{bid}:{j}:{len(prog.psd_blocks)}"
    prog.add_psd_block(zid, 2)
    prog.fix_entry(zid, 0, 1, 1.0, f"{zid}:unit")
    prog.add_eq(
        [LinearFunctional(zid, [(1, 1, 1.0)]), LinearFunctional(bid, [(j, j, -1.0)])],
        0.0,
        f"{zid}:link",
    )
    prog.add_objective(LinearFunctional(zid, [(0, 0, float(weight))]))
    return zid


def add_square_dominance(
    prog: ConicProgram,
    off_diag: tuple[str, int, int],
    diag: tuple[str, int],
    label: str = "dom",
) -> str:
    """Constrain X[r,c]^2 <= Y[a,a] via the 2x2 PSD block [[z,y],[y,1]].

    Rows pin y to X[r,c], z to Y[a,a], and the corner to 1; the block's
    PSD-ness is then exactly z >= y^2.  Returns the new block id.
    """
    bid, r, c = off_diag
    did, a = diag
    zid = f"{label}:{bid}:{r},{c}:{len(prog.psd_blocks)}"
    prog.add_psd_block(zid, 2)
    prog.add_eq(
        [LinearFunctional(zid, [(0, 1, 1.0)]), LinearFunctional(bid, [(min(r, c), max(r, c), -1.0)])],
        0.0,
        f"{zid}:bind-y",
    )
    prog.fix_entry(zid, 1, 1, 1.0, f"{zid}:unit")
    prog.add_eq(
        [LinearFunctional(zid, [(0, 0, 1.0)]), LinearFunctional(did, [(a, a, -1.0)])],
        0.0,
        f"{zid}:bind-z",
    )
    return zid


# ---------------------------------------------------------------------------
# standard-form vectorization
# ---------------------------------------------------------------------------


def svec_index(d: int, r: int, c: int) -> int:
    """Position of entry (r, c), r <= c, in the svec of a d x d matrix."""
    return r * d - (r * (r - 1)) // 2 + (c - r)


def svec_len(d: int) -> int:
    return d * (d + 1) // 2


_SQRT2 = math.sqrt(2.0)


def svec(M: np.ndarray) -> np.ndarray:
    d = M.shape[0]
    out = np.empty(svec_len(d))
    k = 0
    for r in range(d):
        out[k] = M[r, r]
        out[k + 1 : k + d - r] = _SQRT2 * M[r, r + 1 : d]
        k += d - r
    return out


def unsvec(v: np.ndarray, d: int) -> np.ndarray:
    M = np.zeros((d, d))
    k = 0
    for r in range(d):
        M[r, r] = v[k]
        M[r, r + 1 : d] = v[k + 1 : k + d - r] / _SQRT2
        k += d - r
    M += np.triu(M, 1).T
    return M


@dataclass
class StandardForm:
    """min c.x s.t. Ax = b, x = (free, nonneg, svec PSD blocks)."""

    A: sparse.csr_matrix
    b: np.ndarray
    c: np.ndarray
    n_free: int
    n_nonneg: int
    psd_dims: list[int]
    psd_ids: list[str]
    psd_offsets: list[int]
    row_labels: list[str]
    objective_constant: float

    @property
    def n_cols(self) -> int:
        return self.A.shape[1]


def vectorize(prog: ConicProgram) -> StandardForm:
    """Lower a validated program (SOCs included) to standard form."""
    p = prog.lower_socs().canonical()
    nf, nn = p.n_free, p.n_nonneg
    psd_ids = [bid for bid, _ in p.psd_blocks]
    psd_dims = [d for _, d in p.psd_blocks]
    offsets = {}
    col = nf + nn
    psd_offsets = []
    for bid, d in p.psd_blocks:
        offsets[bid] = col
        psd_offsets.append(col)
        col += svec_len(d)
    dim_of = dict(p.psd_blocks)

    def columns(f: LinearFunctional) -> tuple[np.ndarray, np.ndarray]:
        cols, vals = [], []
        if f.block_id == "free":
            for r, _, v in f.entries:
                cols.append(r)
                vals.append(v)
        elif f.block_id == "nonneg":
            for r, _, v in f.entries:
                cols.append(nf + r)
                vals.append(v)
        else:
            base, d = offsets[f.block_id], dim_of[f.block_id]
            for r, c, v in f.entries:
                cols.append(base + svec_index(d, r, c))
                vals.append(v if r == c else v / _SQRT2)
        return np.asarray(cols, dtype=int), np.asarray(vals, dtype=float)

    cvec = np.zeros(col)
    for f in p.objective:
        ci, vi = columns(f)
        np.add.at(cvec, ci, vi)

    rows_i, cols_i, vals_i = [], [], []
    b = np.zeros(len(p.eq_rows))
    labels = []
    for i, row in enumerate(p.eq_rows):
        b[i] = row.rhs
        labels.append(row.label)
        for f in row.terms:
            ci, vi = columns(f)
            rows_i.extend([i] * len(ci))
            cols_i.extend(ci.tolist())
            vals_i.extend(vi.tolist())
    A = sparse.coo_matrix((vals_i, (rows_i, cols_i)), shape=(len(p.eq_rows), col)).tocsr()
    A.sum_duplicates()
    return StandardForm(
        A=A,
        b=b,
        c=cvec,
        n_free=nf,
        n_nonneg=nn,
        psd_dims=psd_dims,
        psd_ids=psd_ids,
        psd_offsets=psd_offsets,
        row_labels=labels,
        objective_constant=p.objective_constant(),
    )


# ---------------------------------------------------------------------------
# text serialization ("conicir 1")
# ---------------------------------------------------------------------------


def export_program(prog: ConicProgram, path: str) -> None:
    """Write the canonicalized program in the versioned triplet text format."""
    p = prog.canonical()
    lines = ["conicir 1"]
    for bid, d in p.psd_blocks:
        lines.append(f"psd {bid} {d}")
    for bid, d in p.soc_blocks:
        lines.append(f"soc {bid} {d}")
    lines.append(f"nonneg {p.n_nonneg}")
    lines.append(f"free {p.n_free}")
    obj_entries = [(f.block_id, r, c, v) for f in p.objective for r, c, v in f.entries]
    lines.append(f"minimize {len(obj_entries)} {p.objective_constant()!r}")
    for bid, r, c, v in obj_entries:
        lines.append(f"{bid} {r} {c} {v!r}")
    lines.append(f"subjectto {len(p.eq_rows)}")
    for row in p.eq_rows:
        n = sum(len(f.entries) for f in row.terms)
        lines.append(f"eq {n} {row.rhs!r} {row.label}")
        for f in row.terms:
            for r, c, v in f.entries:
                lines.append(f"{f.block_id} {r} {c} {v!r}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def import_program(path: str) -> ConicProgram:
    """Read a program written by :func:`export_program`."""
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or lines[0].split() != ["conicir", "1"]:
        raise ValueError(f"{path}: expected format version header 'conicir 1'")
    prog = ConicProgram()
    i = 1

    def entry_lines(count: int, start: int) -> tuple[list[LinearFunctional], int]:
        by_block: dict[str, LinearFunctional] = {}
        pos = start
        for _ in range(count):
            bid, r, c, v = lines[pos].split()
            by_block.setdefault(bid, LinearFunctional(bid)).add(int(r), int(c), float(v))
            pos += 1
        return [f.merged() for f in by_block.values()], pos

    while i < len(lines) and lines[i].split()[0] in ("psd", "soc"):
        kind, bid, d = lines[i].split()
        (prog.add_psd_block if kind == "psd" else prog.add_soc_block)(bid, int(d))
        i += 1
    for name in ("nonneg", "free"):
        key, count = lines[i].split()
        if key != name:
            raise ValueError(f"{path}: expected {name} line, got {lines[i]!r}")
        if name == "nonneg":
            prog.n_nonneg = int(count)
        else:
            prog.n_free = int(count)
        i += 1
    key, count, const = lines[i].split()
    if key != "minimize":
        raise ValueError(f"{path}: expected minimize line")
    i += 1
    terms, i = entry_lines(int(count), i)
    if terms:
        prog.add_objective(terms)
    if float(const) != 0.0:
        prog.add_objective(LinearFunctional("free" if prog.n_free else "nonneg", [], float(const)))
    key, nrows = lines[i].split()
    if key != "subjectto":
        raise ValueError(f"{path}: expected subjectto line")
    i += 1
    for _ in range(int(nrows)):
        parts = lines[i].split(maxsplit=3)
        if parts[0] != "eq":
            raise ValueError(f"{path}: expected eq line, got {lines[i]!r}")
        n, rhs = int(parts[1]), float(parts[2])
        label = parts[3] if len(parts) > 3 else ""
        i += 1
        terms, i = entry_lines(n, i)
        prog.add_eq(terms or LinearFunctional("free", []), rhs, label)
    prog.validate()
    return prog
