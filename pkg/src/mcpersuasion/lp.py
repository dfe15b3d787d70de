"""Exact rational linear programming.

maximize c.x  subject to  rows with relations =, <=, >=  and  x >= 0.

The engine is a two-phase revised simplex with an explicit basis
inverse, run entirely in rational arithmetic (gmpy2.mpq when available,
fractions.Fraction otherwise; both give identical pivoting decisions).
No status is ever reported on trust: an optimal answer carries a dual
vector and is re-checked against the original program (feasibility,
dual sign conditions, reduced costs, strong duality), an infeasible
answer carries a Farkas vector, an unbounded answer carries a feasible
point and an improving ray, and each certificate is verified exactly
before the solution is returned.

Pivoting uses the largest-reduced-cost rule and falls back to the
smallest-index rule after a long run of degenerate pivots, which makes
termination unconditional.  For large programs, when scipy is
installed, a floating-point solve supplies a starting basis guess that
is then rebuilt and certified exactly; the guess changes only the path
taken, never the checked answer.  Output is deterministic for a fixed
input on a fixed installation.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .errors import InvariantViolation, ValidationError

try:  # pragma: no cover - exercised implicitly
    from gmpy2 import mpq as _Q

    def _to_fraction(q) -> Fraction:
        return Fraction(int(q.numerator), int(q.denominator))

except ImportError:  # pragma: no cover
    _Q = Fraction

    def _to_fraction(q) -> Fraction:
        return q


_ZERO = _Q(0)
_ONE = _Q(1)

EQ = "="
LE = "<="
GE = ">="

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"

# Dense float crash bases only pay off once the tableau is sizable.
_CRASH_THRESHOLD = 20_000


class LinearProgram:
    """Immutable program data.  Rows may be given sparse (index -> coeff
    mappings) or dense; everything is normalized to sparse Fractions."""

    __slots__ = ("n_vars", "objective", "constraints", "var_names")

    def __init__(self, n_vars, objective, constraints, var_names=None):
        if n_vars < 0:
            raise ValidationError("variable count must be nonnegative")
        self.n_vars = int(n_vars)
        self.objective = self._norm_row(objective)
        norm = []
        for row, rel, rhs in constraints:
            if rel not in (EQ, LE, GE):
                raise ValidationError(f"unknown relation {rel!r}")
            norm.append((self._norm_row(row), rel, Fraction(rhs)))
        self.constraints = tuple(norm)
        if var_names is not None:
            var_names = tuple(var_names)
            if len(var_names) != self.n_vars:
                raise ValidationError("var_names length mismatch")
        self.var_names = var_names

    def _norm_row(self, row) -> dict:
        if isinstance(row, Mapping):
            items = row.items()
        elif isinstance(row, Sequence):
            items = enumerate(row)
        else:
            raise ValidationError("row must be a mapping or a sequence")
        out = {}
        for j, v in items:
            j = int(j)
            if not (0 <= j < self.n_vars):
                raise ValidationError(f"variable index {j} out of range")
            v = Fraction(v)
            if v:
                out[j] = v
        return out

    @property
    def n_constraints(self) -> int:
        return len(self.constraints)

    def name(self, j: int) -> str:
        return self.var_names[j] if self.var_names else f"x{j + 1}"


@dataclass(frozen=True)
class LPSolution:
    """Certified outcome of a solve.

    assignment/objective are set when optimal (assignment is basic
    feasible); dual is the certified dual vector, one entry per
    constraint.  For infeasible programs farkas holds the separating
    vector; for unbounded ones assignment holds a feasible point and
    ray the improving direction.
    """

    status: str
    assignment: tuple[Fraction, ...] | None = None
    objective: Fraction | None = None
    dual: tuple[Fraction, ...] | None = None
    farkas: tuple[Fraction, ...] | None = None
    ray: tuple[Fraction, ...] | None = None


def dump(lp: LinearProgram) -> str:
    """Plain-text listing of the program for inspection."""

    def term(j, v):
        v = Fraction(v)
        coeff = "" if v == 1 else ("-" if v == -1 else f"{v} ")
        return f"{coeff}{lp.name(j)}"

    def row_text(row):
        if not row:
            return "0"
        parts = []
        for idx, (j, v) in enumerate(sorted(row.items())):
            if idx == 0:
                parts.append(term(j, v))
            elif v < 0:
                parts.append(f"- {term(j, -v)}")
            else:
                parts.append(f"+ {term(j, v)}")
        return " ".join(parts)

    lines = [f"maximize {row_text(lp.objective)}", "subject to"]
    for idx, (row, rel, rhs) in enumerate(lp.constraints):
        lines.append(f"  c{idx + 1}: {row_text(row)} {rel} {rhs}")
    lines.append(f"x >= 0  ({lp.n_vars} variables)")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# certificate checks, run against the original program in plain Fractions


def check_feasible(lp: LinearProgram, x: Sequence[Fraction]) -> bool:
    if len(x) != lp.n_vars or any(v < 0 for v in x):
        return False
    for row, rel, rhs in lp.constraints:
        lhs = sum((x[j] * v for j, v in row.items()), Fraction(0))
        if rel == EQ and lhs != rhs:
            return False
        if rel == LE and not lhs <= rhs:
            return False
        if rel == GE and not lhs >= rhs:
            return False
    return True


def _dual_signs_ok(lp, y):
    for (row, rel, rhs), yi in zip(lp.constraints, y):
        if rel == LE and yi < 0:
            return False
        if rel == GE and yi > 0:
            return False
    return True


def _reduced_costs_ok(lp, y):
    # y'A >= c componentwise
    yA = [Fraction(0)] * lp.n_vars
    for (row, rel, rhs), yi in zip(lp.constraints, y):
        if yi:
            for j, v in row.items():
                yA[j] += yi * v
    return all(yA[j] >= lp.objective.get(j, Fraction(0)) for j in range(lp.n_vars))


def check_optimal(lp, x, y) -> bool:
    if not check_feasible(lp, x):
        return False
    if not _dual_signs_ok(lp, y) or not _reduced_costs_ok(lp, y):
        return False
    primal = sum((x[j] * v for j, v in lp.objective.items()), Fraction(0))
    dual = sum((yi * rhs for (_, _, rhs), yi in zip(lp.constraints, y)), Fraction(0))
    return primal == dual


def check_farkas(lp, y) -> bool:
    if not _dual_signs_ok(lp, y):
        return False
    yA = [Fraction(0)] * lp.n_vars
    for (row, rel, rhs), yi in zip(lp.constraints, y):
        if yi:
            for j, v in row.items():
                yA[j] += yi * v
    if any(v < 0 for v in yA):
        return False
    yb = sum((yi * rhs for (_, _, rhs), yi in zip(lp.constraints, y)), Fraction(0))
    return yb < 0


def check_ray(lp, x0, d) -> bool:
    if not check_feasible(lp, x0):
        return False
    if len(d) != lp.n_vars or any(v < 0 for v in d):
        return False
    gain = sum((d[j] * v for j, v in lp.objective.items()), Fraction(0))
    if gain <= 0:
        return False
    for row, rel, rhs in lp.constraints:
        along = sum((d[j] * v for j, v in row.items()), Fraction(0))
        if rel == EQ and along != 0:
            return False
        if rel == LE and along > 0:
            return False
        if rel == GE and along < 0:
            return False
    return True


# ---------------------------------------------------------------------------
# the engine


class _Engine:
    """Two-phase revised simplex over one program instance."""

    def __init__(self, lp: LinearProgram):
        self.lp = lp
        self.n_real = lp.n_vars
        # standard equality form: real vars, then one slack per inequality
        cols = [dict() for _ in range(self.n_real)]
        b = []
        row_orig = []  # (original constraint index, sign)
        for idx, (row, rel, rhs) in enumerate(lp.constraints):
            i = len(b)
            for j, v in row.items():
                cols[j][i] = _Q(v)
            if rel == LE:
                cols.append({i: _ONE})
            elif rel == GE:
                cols.append({i: -_ONE})
            b.append(_Q(rhs))
            row_orig.append((idx, 1))
        self.n_std = len(cols)
        # flip rows to make b nonnegative (slack entries flip along)
        for i in range(len(b)):
            if b[i] < 0:
                b[i] = -b[i]
                row_orig[i] = (row_orig[i][0], -1)
                for col in cols:
                    if i in col:
                        col[i] = -col[i]
        self.cols = cols
        self.b = b
        self.row_orig = row_orig
        self.m = len(b)
        self.obj = [_Q(lp.objective.get(j, 0)) for j in range(self.n_real)]
        self.obj += [_ZERO] * (self.n_std - self.n_real)
        self.basis: list[int] = []
        self.binv: list[list] = []
        self.xb: list = []

    # -- basic linear algebra helpers

    def _col_times_binv_row(self, j: int, r: int):
        row = self.binv[r]
        return sum((row[i] * v for i, v in self.cols[j].items()), _ZERO)

    def _direction(self, j: int) -> list:
        col = self.cols[j]
        return [
            sum((self.binv[r][i] * v for i, v in col.items()), _ZERO)
            for r in range(self.m)
        ]

    def _duals(self, obj) -> list:
        y = [_ZERO] * self.m
        for r in range(self.m):
            cb = obj[self.basis[r]]
            if cb:
                row = self.binv[r]
                for i in range(self.m):
                    if row[i]:
                        y[i] += cb * row[i]
        return y

    def _refactor(self) -> bool:
        """Rebuild binv and xb from self.basis; False if basis singular."""
        m = self.m
        tab = [
            [self.cols[self.basis[p]].get(i, _ZERO) for p in range(m)]
            + [_ONE if q == i else _ZERO for q in range(m)]
            for i in range(m)
        ]
        for p in range(m):
            pivot = next((i for i in range(p, m) if tab[i][p]), None)
            if pivot is None:
                return False
            tab[p], tab[pivot] = tab[pivot], tab[p]
            pv = tab[p][p]
            tab[p] = [v / pv for v in tab[p]]
            for i in range(m):
                if i != p and tab[i][p]:
                    f = tab[i][p]
                    tab[i] = [a - f * c for a, c in zip(tab[i], tab[p])]
        self.binv = [row[m:] for row in tab]
        self.xb = [
            sum((self.binv[r][i] * self.b[i] for i in range(m)), _ZERO)
            for r in range(m)
        ]
        return True

    def _pivot(self, j: int, r: int, d: list):
        pe = d[r]
        self.binv[r] = [v / pe for v in self.binv[r]]
        self.xb[r] = self.xb[r] / pe
        prow = self.binv[r]
        pxb = self.xb[r]
        for i in range(self.m):
            if i != r and d[i]:
                f = d[i]
                self.binv[i] = [a - f * c for a, c in zip(self.binv[i], prow)]
                self.xb[i] = self.xb[i] - f * pxb
        self.basis[r] = j

    # -- simplex core

    def _entering(self, obj, y, limit, bland):
        best = None
        best_rc = _ZERO
        in_basis = set(self.basis)
        for j in range(limit):
            if j in in_basis:
                continue
            rc = obj[j] - sum((y[i] * v for i, v in self.cols[j].items()), _ZERO)
            if rc > 0:
                if bland:
                    return j, rc
                if best is None or rc > best_rc:
                    best, best_rc = j, rc
        return (best, best_rc) if best is not None else (None, None)

    def _leaving(self, d):
        best_r = None
        best_ratio = None
        best_key = None
        for r in range(self.m):
            if d[r] > 0:
                ratio = self.xb[r] / d[r]
                # prefer evicting artificials, then low variable index
                key = (self.basis[r] < self.n_std, self.basis[r])
                if best_r is None or ratio < best_ratio or (
                    ratio == best_ratio and key < best_key
                ):
                    best_r, best_ratio, best_key = r, ratio, key
        return best_r

    def _run(self, obj, limit):
        """Iterate to optimality of obj over columns < limit.

        Returns None on optimality, or the entering column index when
        unbounded (its direction had no positive entry).
        """
        degenerate_streak = 0
        bland = False
        while True:
            y = self._duals(obj)
            j, _rc = self._entering(obj, y, limit, bland)
            if j is None:
                return None
            d = self._direction(j)
            r = self._leaving(d)
            if r is None:
                return j
            theta = self.xb[r] / d[r] if d[r] else _ZERO
            self._pivot(j, r, d)
            if theta == 0:
                degenerate_streak += 1
                if degenerate_streak > self.m + 10:
                    bland = True
            else:
                degenerate_streak = 0
                bland = False

    # -- phases

    def _start_all_artificial(self):
        for r in range(self.m):
            self.cols.append({r: _ONE})
            self.obj.append(_ZERO)
            self.basis.append(self.n_std + r)
        self.binv = [
            [_ONE if q == r else _ZERO for q in range(self.m)] for r in range(self.m)
        ]
        self.xb = list(self.b)

    def _phase1(self):
        """Returns True if a feasible basis was reached."""
        obj1 = [_ZERO] * self.n_std + [-_ONE] * (len(self.cols) - self.n_std)
        unbounded = self._run(obj1, self.n_std)
        if unbounded is not None:
            raise InvariantViolation("phase-1 objective cannot be unbounded")
        value = sum(
            (obj1[self.basis[r]] * self.xb[r] for r in range(self.m)), _ZERO
        )
        if value < 0:
            self._farkas = self._duals(obj1)
            return False
        return True

    def _evict_artificials(self):
        """Drive artificials out of the basis; drop rows that cannot be
        served by any real column (they are linearly dependent)."""
        redundant = []
        for r in range(self.m):
            if self.basis[r] < self.n_std:
                continue
            if self.xb[r] != 0:
                raise InvariantViolation("artificial basic at nonzero level")
            entered = False
            in_basis = set(self.basis)
            for j in range(self.n_std):
                if j in in_basis:
                    continue
                if self._col_times_binv_row(j, r) != 0:
                    self._pivot(j, r, self._direction(j))
                    entered = True
                    break
            if not entered:
                redundant.append(r)
        if redundant:
            self._drop_rows(redundant)

    def _drop_rows(self, rows):
        drop = set(rows)
        keep = [i for i in range(self.m) if i not in drop]
        remap = {old: new for new, old in enumerate(keep)}
        for col in self.cols:
            stale = [i for i in col if i in drop]
            for i in stale:
                del col[i]
            if any(i in remap and remap[i] != i for i in list(col)):
                updated = {remap[i]: v for i, v in col.items()}
                col.clear()
                col.update(updated)
        self.b = [self.b[i] for i in keep]
        self.row_orig = [self.row_orig[i] for i in keep]
        self.basis = [self.basis[r] for r in range(self.m) if r not in drop]
        self.m = len(keep)
        if not self._refactor():
            raise InvariantViolation("basis became singular after dropping rows")
        if any(v < 0 for v in self.xb):
            raise InvariantViolation("negative basic value after dropping rows")

    # -- crash start from a floating-point solve

    def _try_crash(self) -> bool:
        try:
            import numpy as np
            from scipy.optimize import linprog
            from scipy.sparse import csc_matrix
        except ImportError:
            return False
        rows, cols_idx, data = [], [], []
        for j, col in enumerate(self.cols):
            for i, v in col.items():
                rows.append(i)
                cols_idx.append(j)
                data.append(float(v))
        A = csc_matrix(
            (data, (rows, cols_idx)), shape=(self.m, self.n_std), dtype=float
        )
        c = np.array([-float(v) for v in self.obj[: self.n_std]])
        b = np.array([float(v) for v in self.b])
        try:
            res = linprog(c, A_eq=A, b_eq=b, method="highs")
        except Exception:
            return False
        if not res.success or res.x is None:
            return False
        support = sorted(
            (j for j in range(self.n_std) if res.x[j] > 1e-9),
            key=lambda j: (-res.x[j], j),
        )
        # exact Gauss-Jordan rank completion over the candidate columns
        pivots: list[tuple[int, list]] = []  # (pivot row, reduced dense column)
        chosen: list[int] = []
        used_rows: set[int] = set()
        for j in support:
            if len(chosen) == self.m:
                break
            v = [_ZERO] * self.m
            for i, val in self.cols[j].items():
                v[i] = val
            for pr, pv in pivots:
                f = v[pr]
                if f:
                    v = [a - f * c2 for a, c2 in zip(v, pv)]
            pr = next(
                (i for i in range(self.m) if i not in used_rows and v[i]), None
            )
            if pr is None:
                continue
            pe = v[pr]
            v = [a / pe for a in v]
            for q, (qr, qv) in enumerate(pivots):
                f = qv[pr]
                if f:
                    pivots[q] = (qr, [a - f * c2 for a, c2 in zip(qv, v)])
            pivots.append((pr, v))
            chosen.append(j)
            used_rows.add(pr)
        basis = [-1] * self.m
        for (pr, _), j in zip(pivots, chosen):
            basis[pr] = j
        pads = []
        for r in range(self.m):
            if basis[r] == -1:
                self.cols.append({r: _ONE})
                self.obj.append(_ZERO)
                basis[r] = len(self.cols) - 1
                pads.append(basis[r])
        self.basis = basis
        if not self._refactor():
            return False
        if any(v < 0 for v in self.xb):
            return False
        pad_set = set(pads)
        if any(
            self.xb[r] != 0 for r in range(self.m) if self.basis[r] in pad_set
        ):
            return False
        return True

    # -- public

    def solve(self, use_crash) -> LPSolution:
        crashed = False
        if use_crash and self.m > 0:
            crashed = self._try_crash()
            if not crashed:
                # throw away any pad columns a failed attempt left behind
                del self.cols[self.n_std :]
                del self.obj[self.n_std :]
                self.basis = []
        if not crashed:
            self._start_all_artificial()
            if self.m > 0 and not self._phase1():
                y = self._map_dual(self._farkas)
                if not check_farkas(self.lp, y):
                    raise InvariantViolation("Farkas certificate failed verification")
                return LPSolution(status=INFEASIBLE, farkas=tuple(y))
        self._evict_artificials()
        entering = self._run(self.obj, self.n_std)
        if entering is not None:
            x0 = self._assignment()
            d = self._ray(entering)
            if not check_ray(self.lp, x0, d):
                raise InvariantViolation("unboundedness certificate failed verification")
            return LPSolution(status=UNBOUNDED, assignment=tuple(x0), ray=tuple(d))
        x = self._assignment()
        y = self._map_dual(self._duals(self.obj))
        if not check_optimal(self.lp, x, y):
            raise InvariantViolation("optimality certificate failed verification")
        value = sum(
            (x[j] * v for j, v in self.lp.objective.items()), Fraction(0)
        )
        return LPSolution(
            status=OPTIMAL, assignment=tuple(x), objective=value, dual=tuple(y)
        )

    def _assignment(self) -> list[Fraction]:
        x = [Fraction(0)] * self.n_real
        for r in range(self.m):
            if self.basis[r] < self.n_real:
                x[self.basis[r]] = _to_fraction(self.xb[r])
        return x

    def _ray(self, j: int) -> list[Fraction]:
        d = self._direction(j)
        ray = [Fraction(0)] * self.n_real
        if j < self.n_real:
            ray[j] = Fraction(1)
        for r in range(self.m):
            if self.basis[r] < self.n_real and d[r]:
                ray[self.basis[r]] = _to_fraction(-d[r])
        return ray

    def _map_dual(self, y_std) -> list[Fraction]:
        y = [Fraction(0)] * self.lp.n_constraints
        for i, (orig, sign) in enumerate(self.row_orig):
            y[orig] = _to_fraction(y_std[i]) * sign
        return y


def solve(lp: LinearProgram, use_crash: bool | None = None) -> LPSolution:
    """Solve to a certified status.

    use_crash forces the floating-point warm start on or off; by
    default it is attempted only when scipy is importable and the
    program is large enough to repay the detour.
    """
    if use_crash is None:
        use_crash = lp.n_constraints * max(lp.n_vars, 1) >= _CRASH_THRESHOLD
    return _Engine(lp).solve(use_crash)
