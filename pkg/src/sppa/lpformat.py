"""Reader/writer for the human-readable LP text format.

Covers the subset this package emits: an objective (with optional constant
term), Subject To rows, a Bounds section listing every variable, and
Binaries/Generals sections for integer variables.  Files written here can
be fed to external solvers for cross-checking, and read back for
standalone solver testing.
"""

from __future__ import annotations

import io
import math
import re
from typing import TextIO, Union

from sppa.milp import EQ, GE, LE, LpProblem

__all__ = ["write_lp", "read_lp"]

_RESERVED = {
    "min", "max", "minimize", "maximize", "minimise", "maximise",
    "subject", "to", "st", "s.t.", "such", "that",
    "bounds", "bound", "free", "general", "generals", "gen",
    "binary", "binaries", "bin", "end", "inf", "infinity",
}


def _sanitize(name: str, taken: set[str]) -> str:
    s = re.sub(r"[^A-Za-z0-9_]", "_", name) or "v"
    if s[0].isdigit() or s[0] == "." or s.lower() in _RESERVED or re.match(r"^[eE][0-9.]", s):
        s = "v_" + s
    base, k = s, 1
    while s in taken:
        k += 1
        s = f"{base}_{k}"
    taken.add(s)
    return s


def _num(x: float) -> str:
    return repr(float(x))


def _expr_chunks(coeffs: dict[int, float], names: list[str]) -> list[str]:
    chunks = []
    for j in sorted(coeffs):
        c = coeffs[j]
        if c == 0.0:
            continue
        sign = "-" if c < 0 else "+"
        chunks.append(f"{sign} {_num(abs(c))} {names[j]}")
    return chunks


def _emit_expr(out: TextIO, chunks: list[str], indent: str = " "):
    line = indent
    for i, ch in enumerate(chunks):
        if i == 0 and ch.startswith("+ "):
            ch = ch[2:]
        if len(line) + len(ch) > 240:
            out.write(line + "\n")
            line = indent
        line += (" " if line != indent else "") + ch
    out.write(line)


def write_lp(problem: LpProblem, dest: Union[str, TextIO]) -> None:
    """Write the assembled model in LP text format."""
    if isinstance(dest, str):
        with open(dest, "w") as fh:
            write_lp(problem, fh)
        return
    out = dest
    taken: set[str] = set()
    names = [_sanitize(n, taken) for n in problem.var_names]

    out.write(f"\\ {problem.name}\n")
    out.write("Maximize\n" if problem.sense == "max" else "Minimize\n")
    chunks = _expr_chunks(problem.objective, names)
    if problem.obj_constant:
        chunks.append(f"{'-' if problem.obj_constant < 0 else '+'} {_num(abs(problem.obj_constant))}")
    if not chunks:
        chunks = ["0 " + names[0]] if names else ["0"]
    out.write(" obj:")
    _emit_expr(out, chunks)
    out.write("\nSubject To\n")
    rtaken: set[str] = set()
    for row in problem.rows:
        rname = _sanitize(row.name or "r", rtaken)
        out.write(f" {rname}:")
        _emit_expr(out, _expr_chunks(row.coeffs, names))
        out.write(f" {row.sense} {_num(row.rhs)}\n")
    out.write("Bounds\n")
    for j, name in enumerate(names):
        lo, hi = problem.lb[j], problem.ub[j]
        if lo == hi:
            out.write(f" {name} = {_num(lo)}\n")
        elif not math.isfinite(lo) and not math.isfinite(hi):
            out.write(f" {name} free\n")
        else:
            lo_s = "-infinity" if not math.isfinite(lo) else _num(lo)
            hi_s = "+infinity" if not math.isfinite(hi) else _num(hi)
            out.write(f" {lo_s} <= {name} <= {hi_s}\n")
    binaries = [names[j] for j in range(problem.n_vars)
                if problem.is_int[j] and problem.lb[j] == 0.0 and problem.ub[j] == 1.0]
    generals = [names[j] for j in range(problem.n_vars)
                if problem.is_int[j] and names[j] not in set(binaries)]
    if binaries:
        out.write("Binaries\n")
        for i in range(0, len(binaries), 12):
            out.write(" " + " ".join(binaries[i : i + 12]) + "\n")
    if generals:
        out.write("Generals\n")
        for i in range(0, len(generals), 12):
            out.write(" " + " ".join(generals[i : i + 12]) + "\n")
    out.write("End\n")


# ---------------------------------------------------------------------------
# reader


_SENSES = {"<=": LE, "=<": LE, "<": LE, ">=": GE, "=>": GE, ">": GE, "=": EQ}


def _tokens(text: str) -> list[str]:
    lines = []
    for line in text.splitlines():
        cut = line.find("\\")
        lines.append(line if cut < 0 else line[:cut])
    return re.findall(r"<=|=<|>=|=>|[<>=:+\-*]|[^\s<>=:+\-*]+", "\n".join(lines))


def _is_number(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return tok.lower() in ("inf", "infinity", "+inf", "+infinity", "-inf", "-infinity")


def _to_number(tok: str) -> float:
    low = tok.lower()
    if low in ("inf", "infinity", "+inf", "+infinity"):
        return math.inf
    if low in ("-inf", "-infinity"):
        return -math.inf
    return float(tok)


class _Reader:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0
        self.vars: dict[str, dict] = {}
        self.order: list[str] = []

    def peek(self, ahead: int = 0):
        k = self.i + ahead
        return self.toks[k] if k < len(self.toks) else None

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def at_keyword(self):
        tok = self.peek()
        if tok is None:
            return "end"
        low = tok.lower()
        if low in ("minimize", "minimise", "min", "maximize", "maximise", "max"):
            return "objective"
        if low in ("subject", "st", "s.t.", "such"):
            return "rows"
        if low in ("bounds", "bound"):
            return "bounds"
        if low in ("binaries", "binary", "bin"):
            return "binaries"
        if low in ("generals", "general", "gen"):
            return "generals"
        if low == "end":
            return "end"
        return None

    def var(self, name: str) -> dict:
        if name not in self.vars:
            self.vars[name] = {"lo": 0.0, "hi": math.inf, "int": False,
                               "explicit": False}
            self.order.append(name)
        return self.vars[name]

    def read_expr(self, stop_at_sense: bool) -> tuple[dict[str, float], float]:
        """Linear expression; bare numbers accumulate into the constant."""
        coeffs: dict[str, float] = {}
        constant = 0.0
        sign = 1.0
        pending: float | None = None
        while True:
            tok = self.peek()
            if tok is None or self.at_keyword() or (stop_at_sense and tok in _SENSES):
                break
            self.take()
            if tok == "+":
                continue
            if tok == "-":
                sign = -sign
                continue
            if tok == "*":
                continue
            if _is_number(tok):
                if pending is not None:
                    constant += sign * pending
                    sign = 1.0
                pending = _to_number(tok)
                continue
            # a name: uses the pending coefficient (default 1)
            coef = sign * (pending if pending is not None else 1.0)
            coeffs[tok] = coeffs.get(tok, 0.0) + coef
            self.var(tok)
            sign, pending = 1.0, None
        if pending is not None:
            constant += sign * pending
        return coeffs, constant

    def parse(self) -> LpProblem:
        problem = LpProblem()
        sense = "min"
        obj: dict[str, float] = {}
        obj_const = 0.0
        rows: list[tuple[str | None, dict, str, float]] = []

        while True:
            kw = self.at_keyword()
            if kw == "end":
                break
            if kw == "objective":
                tok = self.take().lower()
                sense = "max" if tok.startswith("max") else "min"
                if self.peek() == ":":  # rare "min:" style
                    self.take()
                # optional label
                if self.peek(1) == ":" and not self.at_keyword():
                    self.take()
                    self.take()
                obj, obj_const = self.read_expr(stop_at_sense=False)
            elif kw == "rows":
                tok = self.take().lower()
                if tok in ("subject", "such"):
                    nxt = self.peek()
                    if nxt is not None and nxt.lower() in ("to", "that"):
                        self.take()
                while self.at_keyword() is None and self.peek() is not None:
                    name = None
                    if self.peek(1) == ":":
                        name = self.take()
                        self.take()
                    coeffs, const = self.read_expr(stop_at_sense=True)
                    sense_tok = self.take()
                    if sense_tok not in _SENSES:
                        raise ValueError(f"expected a row sense, got {sense_tok!r}")
                    rhs_tok = self.take()
                    if rhs_tok is None or not _is_number(rhs_tok):
                        raise ValueError(f"expected a numeric rhs, got {rhs_tok!r}")
                    rows.append((name, coeffs, _SENSES[sense_tok], _to_number(rhs_tok) - const))
            elif kw == "bounds":
                self.take()
                self.parse_bounds()
            elif kw in ("binaries", "generals"):
                self.take()
                while self.at_keyword() is None and self.peek() is not None:
                    v = self.var(self.take())
                    v["int"] = True
                    if kw == "binaries":
                        v["lo"], v["hi"] = 0.0, 1.0
                        v["explicit"] = True
            else:
                raise ValueError(f"unexpected token {self.peek()!r}")

        name_to_id: dict[str, int] = {}
        for name in self.order:
            spec = self.vars[name]
            lo, hi = spec["lo"], spec["hi"]
            if spec["int"] and not (math.isfinite(lo) and math.isfinite(hi)):
                raise ValueError(f"integer variable {name} needs finite bounds")
            name_to_id[name] = problem.add_var(lo, hi, integer=spec["int"], name=name)
        for name, coeffs, sn, rhs in rows:
            problem.add_row({name_to_id[v]: c for v, c in coeffs.items()}, sn, rhs, name=name)
        problem.set_objective({name_to_id[v]: c for v, c in obj.items()}, obj_const, sense)
        return problem

    def parse_bounds(self):
        while self.at_keyword() is None and self.peek() is not None:
            sign = 1.0
            tok = self.take()
            if tok in ("+", "-"):
                sign = -1.0 if tok == "-" else 1.0
                tok = self.take()
            if _is_number(tok):  # "lo <= name [<= hi]"
                lo = sign * _to_number(tok)
                if self.take() not in ("<=", "=<", "<"):
                    raise ValueError("malformed bound line")
                v = self.var(self.take())
                v["lo"] = lo
                v["explicit"] = True
                if self.peek() in ("<=", "=<", "<"):
                    self.take()
                    hs = 1.0
                    nxt = self.take()
                    if nxt in ("+", "-"):
                        hs = -1.0 if nxt == "-" else 1.0
                        nxt = self.take()
                    v["hi"] = hs * _to_number(nxt)
            else:  # "name free" | "name <= hi" | "name >= lo" | "name = v"
                v = self.var(tok)
                nxt = self.take()
                if nxt is not None and nxt.lower() == "free":
                    v["lo"], v["hi"] = -math.inf, math.inf
                    v["explicit"] = True
                    continue
                if nxt not in _SENSES:
                    raise ValueError(f"malformed bound line near {tok!r}")
                hs = 1.0
                val_tok = self.take()
                if val_tok in ("+", "-"):
                    hs = -1.0 if val_tok == "-" else 1.0
                    val_tok = self.take()
                val = hs * _to_number(val_tok)
                v["explicit"] = True
                if _SENSES[nxt] == LE:
                    v["hi"] = val
                elif _SENSES[nxt] == GE:
                    v["lo"] = val
                else:
                    v["lo"] = v["hi"] = val


def read_lp(src: Union[str, TextIO]) -> LpProblem:
    """Parse an LP-format file (path, or an open text stream)."""
    if isinstance(src, str):
        with open(src) as fh:
            return read_lp(fh)
    if isinstance(src, io.TextIOBase) or hasattr(src, "read"):
        text = src.read()
    else:
        text = str(src)
    return _Reader(text).parse()
