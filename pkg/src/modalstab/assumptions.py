"""Finite-range certificates for the spectral and coefficient assumptions.

Every "there is a constant" statement is turned into a constant fitted
over ``k = n+1..k_max`` together with a tail model ``lambda_k <= -c3 k^2``
for the analytic remainder.  Indices ``k`` are 1-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import erfc

from .errors import AssumptionFailed, DivergentAtZero, Divergent, DomainError, NoPeriodFound

# Bernoulli numbers B_2, B_4, ..., B_16
_BERNOULLI = (1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510)


def hurwitz_zeta(alpha: float, a: float, n_direct: int = 16) -> float:
    """``sum_{k>=0} (a + k)^(-alpha)`` by Euler-Maclaurin summation."""
    if alpha <= 1:
        raise DomainError(f"Hurwitz zeta needs alpha > 1, got {alpha}")
    if a <= 0:
        raise DomainError(f"Hurwitz zeta needs a > 0, got {a}")
    N = float(a) + n_direct
    head = sum((a + k) ** -alpha for k in range(n_direct))
    tail = N ** (1 - alpha) / (alpha - 1) + 0.5 * N**-alpha
    rising = alpha  # alpha (alpha+1) ... (alpha+2j-2)
    fact = 2.0  # (2j)!
    power = N ** (-alpha - 1)
    for j, b2j in enumerate(_BERNOULLI, start=1):
        tail += b2j / fact * rising * power
        rising *= (alpha + 2 * j - 1) * (alpha + 2 * j)
        fact *= (2 * j + 1) * (2 * j + 2)
        power /= N * N
    return head + tail


def _as_norms(v, axis):
    v = np.asarray(v, dtype=float)
    if v.ndim == 1:
        return np.abs(v)
    return np.linalg.norm(v, axis=axis)


def _b_norms(B):
    return _as_norms(B, axis=1)


def _c_norms(C):
    C = np.asarray(C, dtype=float)
    if C.ndim == 1:
        return np.abs(C)
    return np.linalg.norm(C, axis=0)


# ---------------------------------------------------------------------------
# A1


@dataclass(frozen=True)
class A1Result:
    M_lambda: float
    partial: float
    tail_bound: float
    c3: float
    exponent: float
    monotone: bool
    lam_next_negative: bool
    ok: bool
    witness: int | None = None


def tail_constant(lam, k_from: int) -> float:
    """Largest ``c`` with ``lambda_k <= -c k^2`` for ``k >= k_from`` on the range."""
    lam = np.asarray(lam, dtype=float)
    k = np.arange(1, len(lam) + 1)
    sel = k >= k_from
    return float(np.min(-lam[sel] / k[sel] ** 2))


def check_A1(lam, n: int = 0, strict: bool = False) -> A1Result:
    """``M_lambda = sum 1/|lambda_k|`` with an integral tail bound.

    The tail beyond the available ``K`` modes uses ``lambda_k <= -c3 k^2``
    with ``c3`` fitted on the second half of the range, giving
    ``sum_{k>K} 1/|lambda_k| <= 1 / (c3 K)``.
    """
    lam = np.asarray(lam, dtype=float)
    K = len(lam)
    k = np.arange(1, K + 1)
    half = K // 2 + 1
    c3 = tail_constant(lam, half)
    tk, tl = np.log(k[half - 1 :]), np.log(np.abs(lam[half - 1 :]))
    exponent = float(np.polyfit(tk, tl, 1)[0])
    if exponent <= 1 or c3 <= 0:
        raise Divergent(f"tail exponent {exponent:.3f} does not give a summable reciprocal series")
    partial = float(np.sum(1.0 / np.abs(lam)))
    tail = 1.0 / (c3 * K)
    steps = np.diff(lam)
    monotone = bool(np.all(steps <= 0))
    witness = None if monotone else int(np.argmax(steps > 0) + 2)
    neg = bool(n >= K or lam[n] < 0)
    if not neg and witness is None:
        witness = n + 1
    res = A1Result(partial + tail, partial, tail, c3, exponent, monotone, neg, monotone and neg, witness)
    if strict and not res.ok:
        raise AssumptionFailed("A1", witness)
    return res


# ---------------------------------------------------------------------------
# A2a


@dataclass(frozen=True)
class A2aResult:
    alpha: float
    d1: float
    c2: float
    slope: float
    ok: bool
    witness: int | None
    k_range: tuple[int, int]


def _envelope_slope(k, r):
    # running max from the right removes the zeros of oscillating coefficients
    env = np.maximum.accumulate(r[::-1])[::-1]
    sel = env > 0
    lo = len(k) // 10
    sel[:lo] = False
    return float(np.polyfit(np.log(k[sel]), np.log(env[sel]), 1)[0])


def check_A2a(lam, B, C, n: int, k_max: int | None = None, alpha: float | None = None, alpha_tol: float = 0.05,
              strict: bool = False) -> A2aResult:
    """Decay ``|b_k / lambda_k| <= d1 / k^alpha`` with ``alpha > 1``.

    Without ``alpha`` the exponent is the negated log-log slope of the
    upper envelope of ``|b_k / lambda_k|``; it must exceed
    ``1 + alpha_tol``.  With ``alpha`` given, ``d1`` is the smallest
    constant making the inequality hold on the range, and the fitted
    exponent must reach ``alpha - alpha_tol``.
    """
    lam = np.asarray(lam, dtype=float)
    k_max = len(lam) if k_max is None else k_max
    k = np.arange(n + 1, k_max + 1)
    r = _b_norms(B)[n:k_max] / np.abs(lam[n:k_max])
    c2 = float(np.max(_c_norms(C)[n:k_max]))
    slope = _envelope_slope(k, r)
    a = -slope if alpha is None else float(alpha)
    scaled = r * k**a
    d1 = float(np.max(scaled))
    if alpha is None:
        ok = a > 1 + alpha_tol
    else:
        ok = a > 1 and -slope >= a - alpha_tol
    witness = None
    if not ok:
        # the scaled ratio keeps growing; report where it peaks
        witness = int(k[np.argmax(r * k ** max(a, 1 + alpha_tol))])
    res = A2aResult(a, d1, c2, slope, ok, witness, (n + 1, k_max))
    if strict and not ok:
        raise AssumptionFailed("A2a", witness)
    return res


# ---------------------------------------------------------------------------
# A2b


@dataclass(frozen=True)
class Grouping:
    k1: int
    groups: tuple[tuple[int, ...], ...]
    labels: tuple[int, ...]
    s: int
    c4: float
    c5: float
    scaled_sums: np.ndarray
    pairing_residual: float

    def covers(self, n: int, k_max: int) -> bool:
        flat = sorted(k for g in self.groups for k in g)
        return flat == list(range(n + 1, k_max + 1))


def pairing_residual(c, k1: int, k_max: int) -> float:
    """Max ``|c_{m k1 + k} - c_{(m+1) k1 - k + 1}|`` over complete blocks."""
    c = np.asarray(c, dtype=float)
    half = k1 // 2
    blocks = k_max // k1
    if blocks == 0 or k1 % 2:
        return np.inf
    m = np.arange(blocks)[:, None]
    kk = np.arange(1, half + 1)[None, :]
    a = c[(m * k1 + kk) - 1]
    b = c[((m + 1) * k1 - kk + 1) - 1]
    return float(np.max(np.abs(a - b)))


def find_period(c, k_max: int, k1_search_max: int = 64, tol: float = 1e-10):
    best = (None, np.inf)
    for k1 in range(2, k1_search_max + 1, 2):
        res = pairing_residual(c, k1, k_max)
        if res <= tol:
            return k1, res
        if res < best[1]:
            best = (k1, res)
    raise NoPeriodFound(best[0], best[1])


def group_index(j: int, k1: int) -> tuple[int, int]:
    """Block ``m`` and offset ``k`` of pair ``j`` (``k`` in ``1..k1/2``)."""
    half = k1 // 2
    m = -(-2 * j // k1) - 1
    return m, j - m * half


def build_Sj(lam, B, C, n: int, k_max: int | None = None, k1_search_max: int = 64, tol: float = 1e-10) -> Grouping:
    """Mirror-pair grouping ``S_j = {m k1 + k, (m+1) k1 - k + 1}``.

    Pairs are taken inside blocks of length ``k1`` so that every index
    belongs to exactly one group.  Groups reaching into the slow range
    ``k <= n`` keep only their fast members (as singletons).
    """
    lam = np.asarray(lam, dtype=float)
    b = np.asarray(B, dtype=float).reshape(len(lam), -1)[:, 0]
    c = np.asarray(C, dtype=float).reshape(-1, len(lam))[0]
    k_max = len(lam) if k_max is None else k_max
    k1, res = find_period(c[:k_max], k_max, k1_search_max, tol)
    k_max = (k_max // k1) * k1
    groups, labels = [], []
    for j in range(1, k_max // 2 + 1):
        m, k = group_index(j, k1)
        pair = (m * k1 + k, (m + 1) * k1 - k + 1)
        fast = tuple(sorted(x for x in pair if x > n))
        if not fast:
            continue
        if len(fast) < len(pair):
            for x in fast:
                groups.append((x,))
                labels.append(j)
        else:
            groups.append(fast)
            labels.append(j)
    ratio = c * b / lam
    sums = np.array([abs(ratio[np.array(g) - 1].sum()) for g in groups])
    jj = np.array(labels, dtype=float)
    scaled = jj**2 * sums
    c4 = float(min(min(g) / j for g, j in zip(groups, labels)))
    return Grouping(k1, tuple(groups), tuple(labels), max(len(g) for g in groups), c4, float(scaled.max()), scaled, res)


def check_gamma(lam, m_list, n: int = 0) -> dict[int, float]:
    """``gamma_m = max_k k^3 |1/lambda_k - 1/lambda_{k+m}|`` for ``k >= max(n, 1)``."""
    lam = np.asarray(lam, dtype=float)
    out = {}
    for m in m_list:
        if m == 0:
            out[m] = 0.0
            continue
        k = np.arange(max(n, 1), len(lam) - m + 1)
        diff = np.abs(1 / lam[k - 1] - 1 / lam[k - 1 + m])
        out[m] = float(np.max(k.astype(float) ** 3 * diff))
    return out


@dataclass(frozen=True)
class A2bResult:
    series_converges: bool
    series_spread: tuple[float, float]
    c1: float
    c2: float
    c3: float
    growth_ok: bool
    gamma: dict
    grouping: Grouping | None
    grouping_ok: bool
    ok: bool
    witness: int | None


def check_A2b(lam, B, C, n: int, k_max: int | None = None, m_list=None, k1_search_max: int = 64,
              strict: bool = False) -> A2bResult:
    """Evaluate all four alternative conditions and report each.

    ``ok`` is true if any of them holds on the range.
    """
    lam = np.asarray(lam, dtype=float)
    k_max = len(lam) if k_max is None else k_max
    bn = _b_norms(B)[:k_max]
    b1 = np.asarray(B, dtype=float).reshape(len(lam), -1)[:k_max, 0]
    k = np.arange(1, k_max + 1)
    # 1: Cauchy contraction of the partial sums of b_k / lambda_k
    S = np.cumsum((b1 / lam[:k_max])[n:])
    q = len(S) // 4
    late = float(np.ptp(S[2 * q :])) if q else np.inf
    early = float(np.ptp(S[q : 2 * q + 1])) if q else np.inf
    series_ok = late < 0.75 * early
    # 2: growth constants for k >= n
    sel = k >= max(n, 1)
    c1 = float(np.max(bn[sel] / k[sel]))
    c2 = float(np.max(_c_norms(C)[:k_max][sel]))
    c3 = float(np.min(-lam[:k_max][sel] / k[sel] ** 2))
    slope = _envelope_slope(k[sel].astype(float), bn[sel])
    growth_ok = c3 > 0 and slope <= 1.05
    # 3: gamma table
    m_list = list(range(0, 9)) if m_list is None else list(m_list)
    gamma = check_gamma(lam[:k_max], m_list, n)
    # 4: grouping
    try:
        grouping = build_Sj(lam[:k_max], np.asarray(B)[:k_max], np.asarray(C).reshape(-1, len(lam))[:, :k_max], n,
                            k_max, k1_search_max)
        grouping_ok = grouping.s <= 2 and grouping.c4 > 0 and grouping.covers(n, (k_max // grouping.k1) * grouping.k1)
    except NoPeriodFound:
        grouping, grouping_ok = None, False
    ok = series_ok or growth_ok or grouping_ok
    witness = None
    if not growth_ok:
        bad = np.nonzero(-lam[:k_max][sel] <= 0)[0]
        witness = int(k[sel][bad[0]]) if bad.size else None
    res = A2bResult(series_ok, (early, late), c1, c2, c3, growth_ok, gamma, grouping, grouping_ok, ok, witness)
    if strict and not ok:
        raise AssumptionFailed("A2b", witness)
    return res


# ---------------------------------------------------------------------------
# eta_n and H_j


@dataclass(frozen=True)
class EtaValue:
    value: np.ndarray
    tail_bound: np.ndarray

    @property
    def upper(self):
        return self.value + self.tail_bound


def eta_n(t, lam, n: int, K_trunc: int | None = None, c3: float | None = None) -> EtaValue:
    """``sum_{k=n+1}^{K} exp(lambda_k t)`` plus a bound on the rest.

    The remainder uses ``lambda_k <= -c3 k^2`` for ``k > K``:
    ``sum_{k>K} exp(-c3 k^2 t) <= (1/2) sqrt(pi / (c3 t)) erfc(K sqrt(c3 t))``.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise DivergentAtZero("eta_n is unbounded as t -> 0")
    lam = np.asarray(lam, dtype=float)
    K = len(lam) if K_trunc is None else K_trunc
    if c3 is None:
        c3 = tail_constant(lam[:K], K // 2 + 1)
    val = np.exp(np.multiply.outer(t, lam[n:K])).sum(axis=-1)
    x = np.sqrt(c3 * t)
    tail = 0.5 * np.sqrt(np.pi) / x * erfc(K * x)
    return EtaValue(val, tail)


def eta_integral(lam, n: int) -> float:
    """``int_0^inf eta_n = sum_{k>n} 1/|lambda_k|`` over the available modes."""
    lam = np.asarray(lam, dtype=float)
    return float(np.sum(1.0 / np.abs(lam[n:])))


def _h_integral(a, p, t):
    """``int_0^t |sum a_k exp(p_k tau)| dtau`` exactly; ``t`` may be inf."""
    a, p = np.asarray(a, float), np.asarray(p, float)

    def h(x):
        return float(np.sum(a * np.exp(p * x)))

    def H(x):
        if np.isinf(x):
            return float(np.sum(-a / p))
        return float(np.sum(a / p * np.expm1(p * x)))

    pmax = np.max(np.abs(p))
    pmin = np.min(np.abs(p))
    t_end = min(t, 60.0 / pmin)
    grid = np.concatenate([[0.0], np.geomspace(1e-6 / pmax, t_end, 512)]) if t_end > 0 else np.array([0.0])
    vals = np.array([h(x) for x in grid])
    nodes = [0.0]
    for i in np.nonzero(vals[:-1] * vals[1:] < 0)[0]:
        nodes.append(brentq(h, grid[i], grid[i + 1], xtol=1e-15, rtol=1e-13))
    nodes.append(t)
    return float(sum(abs(H(b) - H(a_)) for a_, b in zip(nodes[:-1], nodes[1:])))


def check_Hj_bound(grouping: Grouping, lam, B, C, t_grid=(np.inf,)) -> tuple[float, np.ndarray]:
    """``max_j j^2 int_0^t |sum_{S_j} c_k b_k exp(lambda_k tau)| dtau``.

    Integrals are exact: ``h_j`` is integrated in closed form between its
    sign changes, which are bracketed on a geometric grid.

    Returns
    -------
    C3 : float
        Maximum of the scaled integrals over groups and times.
    scaled : ndarray, shape (n_groups, len(t_grid))
    """
    lam = np.asarray(lam, dtype=float)
    b = np.asarray(B, dtype=float).reshape(len(lam), -1)[:, 0]
    c = np.asarray(C, dtype=float).reshape(-1, len(lam))[0]
    out = np.zeros((len(grouping.groups), len(t_grid)))
    for gi, (g, j) in enumerate(zip(grouping.groups, grouping.labels)):
        idx = np.array(g) - 1
        a = c[idx] * b[idx]
        if not np.any(a):
            continue
        for ti, t in enumerate(t_grid):
            out[gi, ti] = j**2 * _h_integral(a, lam[idx], t)
    return float(out.max()) if out.size else 0.0, out


# ---------------------------------------------------------------------------
# report


@dataclass
class AssumptionReport:
    n: int
    k_max: int
    A1: A1Result
    A2a: A2aResult
    A2b: A2bResult
    m_c: float
    C3: float | None = None
    gain_norms: tuple[float, float] | None = None
    delta: float | None = None
    extra: dict = field(default_factory=dict)

    def verdicts(self) -> dict:
        return {"A1": self.A1.ok, "A2a": self.A2a.ok, "A2b": self.A2b.ok}

    def to_text(self) -> str:
        """``key = value`` lines with the witness range of each constant."""
        rng = f"k in [{self.n + 1}, {self.k_max}]"
        g = self.A2b.grouping
        lines = [
            f"n = {self.n}",
            f"k_max = {self.k_max}",
            f"M_lambda = {self.A1.M_lambda!r}  # {rng} + tail 1/(c3 K)",
            f"A1 = {'PASS' if self.A1.ok else 'FAIL'}" + (f"  # witness k={self.A1.witness}" if self.A1.witness else ""),
            f"alpha = {self.A2a.alpha!r}  # {rng}",
            f"d1 = {self.A2a.d1!r}  # {rng}",
            f"c2 = {self.A2a.c2!r}  # {rng}",
            f"A2a = {'PASS' if self.A2a.ok else 'FAIL'}" + (f"  # witness k={self.A2a.witness}" if self.A2a.witness else ""),
            f"c1 = {self.A2b.c1!r}  # {rng}",
            f"c3 = {self.A2b.c3!r}  # {rng}",
            f"A2b.series = {'PASS' if self.A2b.series_converges else 'FAIL'}",
            f"A2b.growth = {'PASS' if self.A2b.growth_ok else 'FAIL'}",
        ]
        for m, v in self.A2b.gamma.items():
            lines.append(f"gamma_{m} = {v!r}")
        if g is not None:
            lines += [
                f"k1 = {g.k1}",
                f"s = {g.s}",
                f"c4 = {g.c4!r}",
                f"c5 = {g.c5!r}",
            ]
        lines.append(f"A2b.grouping = {'PASS' if self.A2b.grouping_ok else 'FAIL'}")
        lines.append(f"A2b = {'PASS' if self.A2b.ok else 'FAIL'}")
        if self.C3 is not None:
            lines.append(f"C3 = {self.C3!r}")
        lines.append(f"m_c = {self.m_c!r}")
        if self.gain_norms is not None:
            lines.append(f"norm_K = {self.gain_norms[0]!r}")
            lines.append(f"norm_L = {self.gain_norms[1]!r}")
        if self.delta is not None:
            lines.append(f"delta = {self.delta!r}")
        for key, val in self.extra.items():
            lines.append(f"{key} = {val!r}")
        return "\n".join(lines) + "\n"


def check_all(modal, n: int, k_max: int | None = None, design=None, alpha: float | None = None) -> AssumptionReport:
    """Run every check on the modal data of one configuration.

    ``alpha`` fixes the decay exponent tested for A2a instead of fitting it.
    """
    from .modal import admissibility_profile

    k_max = modal.n_modes if k_max is None else min(k_max, modal.n_modes)
    if k_max <= n + 1:
        raise ValueError(f"empty mode range: k_max={k_max}, n={n}")
    lam, B, C = modal.lam[:k_max], modal.B[:k_max], modal.C[:, :k_max]
    a1 = check_A1(lam, n)
    a2a = check_A2a(lam, B, C, n, k_max, alpha=alpha)
    a2b = check_A2b(lam, B, C, n, k_max)
    C3 = None
    if a2b.grouping is not None:
        C3, _ = check_Hj_bound(a2b.grouping, lam, B, C)
    h_top = min(1e4, float(-lam[-1]))
    hs = [h for h in (10.0, 1e2, 1e3, 1e4) if h <= h_top] or [h_top]
    _, m_c = admissibility_profile(lam, C, hs)
    gains = delta = None
    if design is not None:
        gains = (float(np.linalg.norm(design.K, 2)), float(np.linalg.norm(design.L, 2)))
        from .design import separation_matrix

        delta = float(np.max(np.linalg.eigvals(separation_matrix(design, modal)).real))
    return AssumptionReport(n, k_max, a1, a2a, a2b, m_c, C3, gains, delta)
