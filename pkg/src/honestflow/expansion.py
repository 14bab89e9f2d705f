"""Order-by-order boundary expansion of the transported density.

The evolved density splits into orders: order 0 is the free stream (mass
that has not touched the boundary), and order k carries exactly the mass
that has crossed the boundary k times.  On an interval union everything is
determined by boundary *time histories*:

- ``psi_k[m](s)``: outgoing trace of order k at ``b_m`` as a function of
  time, and
- ``u_k[j](s)``: incoming trace of order k at ``a_j``,

with the exact recursion ``psi_0[m](s) = f(b_m - s)``, ``u_k = rule applied
to psi_{k-1}`` entrywise in time, and ``psi_k[m](s) = u_k[m](s - length_m)``.
The order-k density on interval j at time t is the incoming history read
backwards: ``x -> u_k[j](t - (x - a_j))``.  All histories are step
functions, so every quantity below (densities, integrated traces, masses,
defects) is evaluated in closed form.

Truncation is certified: the mass missing beyond order n is bounded by the
time-integrated outgoing trace norm of order n, which telescopes out of the
order-mass balance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .boundary import BoundaryRule, BoundaryVector, apply_rule, apply_rule_histories
from .densities import PiecewiseDensity, free_stream, sample_ladder_positions
from .geometry import IntervalUnion
from .steps import StepFunction

__all__ = [
    "Expansion",
    "TruncationReport",
    "MassBalanceReport",
    "order_density",
    "order_value",
    "evolve",
    "evolve_scaled",
    "integrated_trace",
    "mass_balance",
    "composition_residual",
    "mc_mass_estimate",
]

DEFAULT_TOL = 1e-8
DEFAULT_N_CAP = 128


class Expansion:
    """Lazy per-order boundary histories of one initial density up to a time
    horizon ``t_max``."""

    def __init__(self, geom: IntervalUnion, rule: BoundaryRule, f: PiecewiseDensity, t_max: float):
        if t_max < 0.0:
            raise ValueError("time horizon must be nonnegative")
        if rule.kind == "specular":
            raise ValueError("interval-union expansions need a shift or kernel rule")
        self.geom = geom
        self.rule = rule
        self.f = f
        self.t_max = float(t_max)
        psi0 = {}
        for m, part in f.parts.items():
            g = part.reflect(geom.b(m)).clip(0.0, self.t_max)
            if not g.is_zero:
                psi0[m] = g
        self._outgoing: list[dict[int, StepFunction]] = [psi0]
        self._incoming: list[dict[int, StepFunction]] = [{}]  # order 0 has no incoming part
        self._exhausted_at: int | None = 0 if not psi0 else None

    def _ensure(self, k: int):
        while len(self._outgoing) <= k:
            if self._exhausted_at is not None:
                self._incoming.append({})
                self._outgoing.append({})
                continue
            u = apply_rule_histories(self.rule, self._outgoing[-1], self.geom)
            psi = {}
            for m, h in u.items():
                g = h.shift(self.geom.delta(m)).clip(0.0, self.t_max)
                if not g.is_zero:
                    psi[m] = g
            self._incoming.append(u)
            self._outgoing.append(psi)
            if not psi:
                self._exhausted_at = len(self._outgoing) - 1

    @property
    def exhausted_order(self) -> int | None:
        """First order whose outgoing histories vanish identically (all
        later orders vanish too), if reached yet."""
        return self._exhausted_at

    def outgoing_history(self, k: int) -> dict[int, StepFunction]:
        self._ensure(k)
        return self._outgoing[k]

    def incoming_history(self, k: int) -> dict[int, StepFunction]:
        if k == 0:
            return {}
        self._ensure(k)
        return self._incoming[k]

    def _check_t(self, t: float):
        if not 0.0 <= t <= self.t_max:
            raise ValueError(f"t={t} outside the expansion horizon [0, {self.t_max}]")

    # -- exact evaluations ---------------------------------------------------

    def order_density(self, k: int, t: float) -> PiecewiseDensity:
        """Density of mass having crossed the boundary exactly k times."""
        self._check_t(t)
        if k == 0:
            return free_stream(self.f, t, self.geom)
        parts = {}
        for j, h in self.incoming_history(k).items():
            g = h.reflect(t).shift(self.geom.a(j)).clip(self.geom.a(j), self.geom.b(j))
            if not g.is_zero:
                parts[j] = g
        return PiecewiseDensity(parts)

    def order_value(self, k: int, t: float, x: float) -> float:
        """Pointwise value of the order-k density at interior point x."""
        self._check_t(t)
        kk = self.geom.index_of(x)
        if kk is None:
            raise ValueError(f"x={x} is not interior to the geometry")
        if k == 0:
            back = x - t
            return self.f.part(kk)(back) if back > self.geom.a(kk) else 0.0
        h = self.incoming_history(k).get(kk)
        if h is None:
            return 0.0
        return h(t - (x - self.geom.a(kk)))

    def order_mass(self, k: int, t: float) -> float:
        return self.order_density(k, t).mass()

    def integrated_trace(self, k: int, s: float, t: float) -> BoundaryVector:
        """Outgoing trace of order k integrated over the window [s, t]."""
        self._check_t(t)
        if not 0.0 <= s <= t:
            raise ValueError("need 0 <= s <= t")
        return BoundaryVector(
            "outgoing",
            tuple(
                (m, h.window_integral(s, t)) for m, h in self.outgoing_history(k).items()
            ),
        )

    def incoming_integrated_trace(self, k: int, s: float, t: float) -> BoundaryVector:
        self._check_t(t)
        if not 0.0 <= s <= t:
            raise ValueError("need 0 <= s <= t")
        return BoundaryVector(
            "incoming",
            tuple(
                (m, h.window_integral(s, t)) for m, h in self.incoming_history(k).items()
            ),
        )


@dataclass(frozen=True)
class TruncationReport:
    """How an order sum was cut off.

    ``residual_bound`` bounds the l1 mass of every order beyond the last one
    included; ``converged`` records whether it dropped under tol before the
    order cap."""

    n_used: int
    residual_bound: float
    converged: bool
    tol: float
    n_cap: int
    order_masses: tuple
    trace_norms: tuple


@dataclass(frozen=True)
class MassBalanceReport:
    """Both sides of the order-mass balance at (n, t).

    lhs: sum of order masses 0..n.  rhs: initial mass, minus the order-n
    integrated outgoing trace norm, plus the bracket terms (incoming minus
    outgoing integrated trace norms per order below n; each is <= 0, and
    exactly 0 for a conservative rule)."""

    n: int
    t: float
    lhs: float
    rhs: float
    order_masses: tuple
    bracket_terms: tuple
    final_trace_norm: float

    @property
    def gap(self) -> float:
        return self.lhs - self.rhs


def order_density(k: int, t: float, f: PiecewiseDensity, geom: IntervalUnion,
                  rule: BoundaryRule) -> PiecewiseDensity:
    return Expansion(geom, rule, f, t).order_density(k, t)


def order_value(k: int, t: float, f: PiecewiseDensity, x: float, geom: IntervalUnion,
                rule: BoundaryRule) -> float:
    return Expansion(geom, rule, f, t).order_value(k, t, x)


def integrated_trace(k: int, t: float, f: PiecewiseDensity, geom: IntervalUnion,
                     rule: BoundaryRule, s: float = 0.0) -> BoundaryVector:
    return Expansion(geom, rule, f, t).integrated_trace(k, s, t)


def evolve(
    t: float,
    f: PiecewiseDensity,
    geom: IntervalUnion,
    rule: BoundaryRule,
    tol: float = DEFAULT_TOL,
    n_cap: int = DEFAULT_N_CAP,
) -> tuple[PiecewiseDensity, TruncationReport]:
    """Partial order sum at time t with certified truncation.

    Orders are accumulated until the integrated outgoing trace norm of the
    last order drops below tol (that norm bounds all mass beyond it) or the
    order cap is hit, in which case the report says so and the density is
    the partial result.
    """
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    if n_cap < 0:
        raise ValueError("n_cap must be nonnegative")
    ex = Expansion(geom, rule, f, t)
    total = PiecewiseDensity.zero()
    masses = []
    norms = []
    n = 0
    while True:
        part = ex.order_density(n, t)
        total = total + part
        masses.append(part.mass())
        residual = ex.integrated_trace(n, 0.0, t).norm()
        norms.append(residual)
        if residual < tol:
            report = TruncationReport(n, residual, True, tol, n_cap, tuple(masses), tuple(norms))
            return total, report
        if n >= n_cap:
            report = TruncationReport(n, residual, False, tol, n_cap, tuple(masses), tuple(norms))
            return total, report
        n += 1


def evolve_scaled(
    t: float,
    f: PiecewiseDensity,
    r: float,
    geom: IntervalUnion,
    rule: BoundaryRule,
    tol: float = DEFAULT_TOL,
    n_cap: int = DEFAULT_N_CAP,
) -> tuple[PiecewiseDensity, TruncationReport]:
    """Same as :func:`evolve` with the rule's overall weight replaced by r."""
    return evolve(t, f, geom, rule.scaled(r), tol=tol, n_cap=n_cap)


def mass_balance(
    n: int, t: float, f: PiecewiseDensity, geom: IntervalUnion, rule: BoundaryRule
) -> MassBalanceReport:
    """Exact order-mass balance at truncation order n and time t."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    ex = Expansion(geom, rule, f, t)
    masses = tuple(ex.order_mass(k, t) for k in range(n + 1))
    out_norms = [ex.integrated_trace(k, 0.0, t).norm() for k in range(n + 1)]
    brackets = tuple(
        apply_rule(rule, ex.integrated_trace(k, 0.0, t), geom).norm() - out_norms[k]
        for k in range(n)
    )
    rhs = f.mass() - out_norms[n] + float(sum(brackets))
    return MassBalanceReport(n, t, float(sum(masses)), rhs, masses, brackets, out_norms[n])


def composition_residual(
    k: int, t: float, s: float, f: PiecewiseDensity, geom: IntervalUnion, rule: BoundaryRule
) -> float:
    """l1 gap in the order composition law at (t, s):

    order k at time t+s versus the convolution of orders j at t applied to
    orders k-j at s, summed over j.
    """
    if k < 0 or t < 0.0 or s < 0.0:
        raise ValueError("need k >= 0 and nonnegative times")
    direct = Expansion(geom, rule, f, t + s).order_density(k, t + s)
    inner = Expansion(geom, rule, f, s)
    combined = PiecewiseDensity.zero()
    for j in range(k + 1):
        g = inner.order_density(k - j, s)
        if not g.parts:
            continue
        combined = combined + Expansion(geom, rule, g, t).order_density(j, t)
    return direct.l1_distance(combined)


def mc_mass_estimate(
    f: PiecewiseDensity,
    t: float,
    r: float,
    geom: IntervalUnion,
    n_particles: int = 100_000,
    seed: int = 0,
    use_numba=None,
) -> tuple[float, float]:
    """Monte Carlo estimate of the evolved mass, with its standard error.

    Particles are drawn from f, drift right at unit speed, jump from each
    outgoing endpoint to the next incoming one and survive each jump with
    probability r (counter-based draws).  This is a cross-check of the
    exact order sum, not an exact path.
    """
    if t < 0.0:
        raise ValueError("time must be nonnegative")
    x0, k0 = sample_ladder_positions(f, geom, n_particles, seed)
    k_top = geom.reach_index(f.max_index(), t) + 2
    if math.isfinite(geom.n_intervals):
        k_top = min(k_top, int(geom.n_intervals) - 1)
    idx = range(k_top + 1)
    a = np.array([geom.a(k) for k in idx])
    b = np.array([geom.b(k) for k in idx])
    tail = np.array([geom.tail_delta(k) for k in idx])
    alive, _ = _kernels.ladder_survival(x0, k0, a, b, tail, r, t, seed, use_numba=use_numba)
    total = f.mass()
    p = float(np.mean(alive))
    estimate = total * p
    stderr = total * float(np.sqrt(max(p * (1.0 - p), 0.0) / n_particles))
    return estimate, stderr
