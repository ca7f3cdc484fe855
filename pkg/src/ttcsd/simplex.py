"""Two-phase primal simplex over exact rationals.

Bland's rule is used for both entering and leaving variables, so the method
terminates without any anti-cycling tolerance. Intended for the small LPs
arising in dominance checks (a few dozen variables).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LPResult:
    status: str
    x: tuple[Fraction, ...] | None = None
    value: Fraction | None = None


class _Tableau:
    def __init__(self, rows: list[list[Fraction]], rhs: list[Fraction], basis: list[int]):
        self.rows = rows
        self.rhs = rhs
        self.basis = basis

    def pivot(self, r: int, c: int) -> None:
        row = self.rows[r]
        piv = row[c]
        if piv != 1:
            inv = 1 / piv
            self.rows[r] = row = [v * inv for v in row]
            self.rhs[r] *= inv
        for k, other in enumerate(self.rows):
            if k == r:
                continue
            f = other[c]
            if f:
                self.rows[k] = [a - f * b if b else a for a, b in zip(other, row)]
                self.rhs[k] -= f * self.rhs[r]
        self.basis[r] = c

    def reduced_costs(self, cost: Sequence[Fraction]) -> list[Fraction]:
        """``c_j - c_B B^-1 A_j`` for each column (maximisation)."""
        red = list(cost)
        for r, b in enumerate(self.basis):
            cb = cost[b]
            if cb:
                red = [v - cb * a for v, a in zip(red, self.rows[r])]
        return red

    def maximise(self, cost: Sequence[Fraction], allowed: int) -> str:
        """Optimise over the first ``allowed`` columns."""
        red = self.reduced_costs(cost)
        while True:
            entering = next((j for j in range(allowed) if red[j] > 0), None)
            if entering is None:
                return OPTIMAL
            best = None
            for r, row in enumerate(self.rows):
                a = row[entering]
                if a > 0:
                    key = (self.rhs[r] / a, self.basis[r])
                    if best is None or key < best[0]:
                        best = (key, r)
            if best is None:
                return UNBOUNDED
            r = best[1]
            self.pivot(r, entering)
            # keep the objective row in step with the pivot
            f = red[entering]
            red = [a - f * b if b else a for a, b in zip(red, self.rows[r])]

    def value(self, cost: Sequence[Fraction]) -> Fraction:
        return sum((cost[b] * self.rhs[r] for r, b in enumerate(self.basis)), Fraction(0))


def maximise(
    c: Sequence[Fraction],
    a_ub: Sequence[Sequence[Fraction]] = (),
    b_ub: Sequence[Fraction] = (),
    a_eq: Sequence[Sequence[Fraction]] = (),
    b_eq: Sequence[Fraction] = (),
) -> LPResult:
    """Maximise ``c.x`` subject to ``a_ub x <= b_ub``, ``a_eq x = b_eq``, ``x >= 0``."""
    nvar = len(c)
    n_ub = len(a_ub)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    natural: list[int | None] = []
    for k, (a, b) in enumerate(zip(a_ub, b_ub)):
        row = [Fraction(v) for v in a] + [Fraction(0)] * n_ub
        row[nvar + k] = Fraction(1)
        b = Fraction(b)
        if b < 0:
            row = [-v for v in row]
            b = -b
            natural.append(None)
        else:
            natural.append(nvar + k)
        rows.append(row)
        rhs.append(b)
    for a, b in zip(a_eq, b_eq):
        row = [Fraction(v) for v in a] + [Fraction(0)] * n_ub
        b = Fraction(b)
        if b < 0:
            row = [-v for v in row]
            b = -b
        rows.append(row)
        rhs.append(b)
        natural.append(None)

    width = nvar + n_ub
    n_art = sum(1 for s in natural if s is None)
    basis = []
    art = width
    for row, s in zip(rows, natural):
        row.extend([Fraction(0)] * n_art)
        if s is None:
            row[art] = Fraction(1)
            basis.append(art)
            art += 1
        else:
            basis.append(s)
    tab = _Tableau(rows, rhs, basis)
    total = width + n_art

    if n_art:
        phase1 = [Fraction(0)] * width + [Fraction(-1)] * n_art
        tab.maximise(phase1, total)
        if tab.value(phase1) < 0:
            return LPResult(INFEASIBLE)
        # drive zero-level artificials out of the basis, dropping redundant rows
        r = 0
        while r < len(tab.rows):
            if tab.basis[r] >= width:
                col = next((j for j in range(width) if tab.rows[r][j] != 0), None)
                if col is None:
                    del tab.rows[r], tab.rhs[r], tab.basis[r]
                    continue
                tab.pivot(r, col)
            r += 1

    cost = [Fraction(v) for v in c] + [Fraction(0)] * (n_ub + n_art)
    status = tab.maximise(cost, width)
    if status != OPTIMAL:
        return LPResult(status)
    x = [Fraction(0)] * width
    for r, b in enumerate(tab.basis):
        x[b] = tab.rhs[r]
    return LPResult(OPTIMAL, tuple(x[:nvar]), tab.value(cost))
