"""Deterministic MPS and LP-text writers plus parsers for round-trip checks.

The MPS writer emits free-format (whitespace aligned) sections; all our belief
variables carry the default bound 0 <= x, so no BOUNDS section is needed.
Floats are written with repr, which round-trips exactly, making exports
byte-stable for golden tests.
"""

from __future__ import annotations

from .errors import InputError
from .lpbp import BeliefLP, Column, Row


def export_lp_string(lp: BeliefLP, fmt: str = "mps") -> str:
    names = lp.column_names()
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise InputError(f"belief name collision: {dupes[0]}")
    row_names = [r.name for r in lp.rows]
    if len(set(row_names)) != len(row_names):
        raise InputError("constraint name collision")
    if fmt == "mps":
        return _to_mps(lp)
    if fmt == "lp":
        return _to_lp_text(lp)
    raise InputError(f"unknown export format {fmt!r} (use 'mps' or 'lp')")


def export_lp(lp: BeliefLP, fmt: str, path: str) -> None:
    text = export_lp_string(lp, fmt)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _to_mps(lp: BeliefLP) -> str:
    out = ["NAME          PCNF", "ROWS", " N  COST"]
    for row in lp.rows:
        out.append(f" E  {row.name}")
    out.append("COLUMNS")
    by_col: dict[int, list[tuple[str, float]]] = {j: [] for j in range(lp.n_cols)}
    for row in lp.rows:
        for j, v in row.coefs:
            if v != 0.0:
                by_col[j].append((row.name, v))
    for j, col in enumerate(lp.columns):
        entries = []
        if col.objective != 0.0 or not by_col[j]:
            entries.append(("COST", col.objective))
        entries.extend(by_col[j])
        for i in range(0, len(entries), 2):
            chunk = entries[i:i + 2]
            parts = [f"    {col.name}"]
            for rname, v in chunk:
                parts.append(f"  {rname}  {v!r}")
            out.append("".join(parts))
    out.append("RHS")
    for row in lp.rows:
        if row.rhs != 0.0:
            out.append(f"    RHS  {row.name}  {row.rhs!r}")
    out.append("ENDATA")
    return "\n".join(out) + "\n"


def _to_lp_text(lp: BeliefLP) -> str:
    # every column appears on the objective line (zeros included) so a parse
    # recovers the exact column ordering
    out = ["\\ pcnf belief LP", "Minimize"]
    terms = [f"{col.objective!r} {col.name}" for col in lp.columns]
    out.append(" obj: " + (" + ".join(terms) if terms else "0"))
    out.append("Subject To")
    for row in lp.rows:
        parts = " + ".join(f"{v!r} {lp.columns[j].name}" for j, v in row.coefs if v != 0.0)
        out.append(f" {row.name}: {parts if parts else '0'} = {row.rhs!r}")
    out.append("End")
    return "\n".join(out) + "\n"


def parse_lp_file(path: str) -> BeliefLP:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_lp_string(text)


def parse_lp_string(text: str) -> BeliefLP:
    stripped = text.lstrip()
    if stripped.startswith("NAME"):
        return _parse_mps(text)
    if stripped.startswith("\\") or stripped.lower().startswith("minimize"):
        return _parse_lp_text(text)
    raise InputError("unrecognized LP file format")


def _parse_mps(text: str) -> BeliefLP:
    section = None
    row_order: list[str] = []
    rhs: dict[str, float] = {}
    col_order: list[str] = []
    objective: dict[str, float] = {}
    entries: dict[str, list[tuple[str, float]]] = {}
    for raw in text.splitlines():
        line = raw.rstrip()
        if not line:
            continue
        token = line.strip()
        if token in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA") or token.startswith("NAME"):
            section = token.split()[0]
            continue
        fields = token.split()
        if section == "ROWS":
            typ, name = fields
            if typ == "N":
                continue
            if typ != "E":
                raise InputError(f"unsupported MPS row type {typ}")
            row_order.append(name)
            entries[name] = []
        elif section == "COLUMNS":
            col = fields[0]
            if col not in objective:
                objective[col] = 0.0
                col_order.append(col)
            for i in range(1, len(fields), 2):
                rname, val = fields[i], float(fields[i + 1])
                if rname == "COST":
                    objective[col] = val
                else:
                    entries[rname].append((col, val))
        elif section == "RHS":
            rhs[fields[1]] = float(fields[2])
    return _assemble(col_order, objective, row_order, entries, rhs)


def _parse_lp_text(text: str) -> BeliefLP:
    lines = [ln.rstrip() for ln in text.splitlines() if ln.strip()]
    mode = None
    col_order: list[str] = []
    objective: dict[str, float] = {}
    row_order: list[str] = []
    entries: dict[str, list[tuple[str, float]]] = {}
    rhs: dict[str, float] = {}

    def note_col(name):
        if name not in objective:
            objective[name] = 0.0
            col_order.append(name)

    for line in lines:
        token = line.strip()
        if token.startswith("\\"):
            continue
        low = token.lower()
        if low == "minimize":
            mode = "obj"
            continue
        if low == "subject to":
            mode = "rows"
            continue
        if low == "end":
            break
        if mode == "obj":
            body = token.split(":", 1)[1].strip()
            for coef, name in _parse_terms(body):
                note_col(name)
                objective[name] = coef
        elif mode == "rows":
            rname, body = token.split(":", 1)
            lhs, rval = body.rsplit("=", 1)
            row_order.append(rname.strip())
            coefs = []
            for coef, name in _parse_terms(lhs.strip()):
                note_col(name)
                coefs.append((name, coef))
            entries[rname.strip()] = coefs
            rhs[rname.strip()] = float(rval)
    return _assemble(col_order, objective, row_order, entries, rhs)


def _parse_terms(body: str):
    if body == "0":
        return
    for term in body.split("+"):
        parts = term.strip().split()
        if len(parts) != 2:
            raise InputError(f"cannot parse LP term {term!r}")
        yield float(parts[0]), parts[1]


def _assemble(col_order, objective, row_order, entries, rhs) -> BeliefLP:
    index = {name: j for j, name in enumerate(col_order)}
    cols = [Column(name, objective[name], "parsed", name, ()) for name in col_order]
    rows = []
    for rname in row_order:
        coefs = tuple((index[c], v) for c, v in entries.get(rname, []))
        rows.append(Row(rname, coefs, rhs.get(rname, 0.0)))
    return BeliefLP(columns=cols, rows=rows, meta={"kind": "parsed"})


def lp_equal(a: BeliefLP, b: BeliefLP, tol: float = 0.0) -> bool:
    """Structural identity: names, ordering, coefficients, rhs, objective."""
    if a.column_names() != b.column_names():
        return False
    for ca, cb in zip(a.columns, b.columns):
        if abs(ca.objective - cb.objective) > tol:
            return False
    if [r.name for r in a.rows] != [r.name for r in b.rows]:
        return False
    for ra, rb in zip(a.rows, b.rows):
        da = {j: v for j, v in ra.coefs if v != 0.0}
        db = {j: v for j, v in rb.coefs if v != 0.0}
        if set(da) != set(db):
            return False
        if any(abs(da[k] - db[k]) > tol for k in da):
            return False
        if abs(ra.rhs - rb.rhs) > tol:
            return False
    return True
