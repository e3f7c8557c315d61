"""Integer Smith normal form with unimodular transforms (exact Python ints)."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["SmithForm", "smith_normal_form"]


@dataclass(frozen=True)
class SmithForm:
    """``U @ A @ V == diag(d)`` padded to A's shape, with U and V unimodular."""

    U: list[list[int]]
    V: list[list[int]]
    d: list[int]  # nonzero invariant factors, each dividing the next

    @property
    def rank(self) -> int:
        return len(self.d)


def _identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def smith_normal_form(A: list[list[int]]) -> SmithForm:
    rows = len(A)
    cols = len(A[0]) if rows else 0
    M = [list(map(int, r)) for r in A]
    U = _identity(rows)
    V = _identity(cols)

    def swap_rows(i, j):
        M[i], M[j] = M[j], M[i]
        U[i], U[j] = U[j], U[i]

    def swap_cols(i, j):
        for r in M:
            r[i], r[j] = r[j], r[i]
        for r in V:
            r[i], r[j] = r[j], r[i]

    def add_row(dst, src, k):  # row dst += k * row src
        M[dst] = [a + k * b for a, b in zip(M[dst], M[src])]
        U[dst] = [a + k * b for a, b in zip(U[dst], U[src])]

    def add_col(dst, src, k):  # col dst += k * col src
        for r in M:
            r[dst] += k * r[src]
        for r in V:
            r[dst] += k * r[src]

    t = 0
    while t < min(rows, cols):
        # pivot: smallest nonzero magnitude in the remaining block
        nz = [(abs(M[i][j]), i, j) for i in range(t, rows) for j in range(t, cols) if M[i][j]]
        if not nz:
            break
        _, pi, pj = min(nz)
        swap_rows(t, pi)
        swap_cols(t, pj)
        while True:
            done = True
            for i in range(t + 1, rows):
                if M[i][t]:
                    add_row(i, t, -(M[i][t] // M[t][t]))
                    if M[i][t]:
                        swap_rows(t, i)
                        done = False
            for j in range(t + 1, cols):
                if M[t][j]:
                    add_col(j, t, -(M[t][j] // M[t][t]))
                    if M[t][j]:
                        swap_cols(t, j)
                        done = False
            if done:
                # divisibility: the pivot must divide the whole remaining block
                bad = next(((i, j) for i in range(t + 1, rows) for j in range(t + 1, cols)
                            if M[i][j] % M[t][t]), None)
                if bad is None:
                    break
                add_row(t, bad[0], 1)
        if M[t][t] < 0:
            M[t] = [-x for x in M[t]]
            U[t] = [-x for x in U[t]]
        t += 1
    d = [M[i][i] for i in range(min(rows, cols)) if M[i][i]]
    return SmithForm(U, V, d)
