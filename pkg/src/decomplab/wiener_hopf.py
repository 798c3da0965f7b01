"""Numerical Wiener-Hopf factorization of the auxiliary killed exponent.

For ``r in (0, inf)`` the function

    psi_r(theta) = -theta / Phi1(theta) + r theta / Phi2(-theta),  theta in iR,

is the exponent of a killed Levy process with killing rate
``k_r = mu1^+ + r mu2^+``.  Its factors satisfy
``Psi_r^+(theta) Psi_r^-(theta) = -k_r / psi_r(theta)`` on the imaginary axis,
``Psi^+`` being analytic in the right half-plane and ``Psi^-`` in the left.

``log Psi^+`` is recovered from ``h = log(-k_r / psi_r)`` on ``iR`` by the
Cauchy projection

    log Psi^+(s) = -(1/2pi) int h(iu) [1/(iu - s) - 1/(iu)] du,   Re s > 0,

discretised with the trapezoidal rule after the substitution
``u = b sinh(t)``.  The substitution resolves every scale between ``b`` and
the outer limit with the same relative density, so a single node set serves
arguments from ``1e-3`` to ``1e6``.  Before integrating, the constant limit
``h(i inf)`` is removed with a rational function whose projections are known
in closed form; on the axis itself a second rational subtraction makes the
integrand regular at ``u = Im s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .analytic import _psi, phi_inverse
from .errors import DegenerateModelError, DomainError, DriftError, QuadratureFailure
from .model import (
    CompoundPoissonSpec,
    QueueModel,
    RiskModel,
    mean_drift,
    negative_part,
    positive_part,
    validate_queue,
    validate_risk,
)

# rates outside this band use the closed-form limits
RATE_FLOOR = 1e-6
RATE_CEIL = 1e6
AXIS_LIMIT_CUTOFF = 1e-8
_Q_SCALE = 1.0  # scale of the rational function carrying h(i inf)


@dataclass(frozen=True)
class AuxModel:
    spec1: CompoundPoissonSpec
    spec2: CompoundPoissonSpec
    r: float

    def __post_init__(self):
        r = float(self.r)
        if not (math.isfinite(r) and r > 0):
            raise ValueError(f"auxiliary rate must be finite and > 0, got {self.r!r}")
        object.__setattr__(self, "r", r)
        if self.killing_rate <= 0:
            raise DriftError("killing rate mu1^+ + r mu2^+ must be > 0")

    @property
    def killing_rate(self) -> float:
        return positive_part(mean_drift(self.spec1)) + self.r * positive_part(mean_drift(self.spec2))

    @property
    def drift_sum(self) -> float:
        """``c1 + r c2``; ``-psi_r`` tends to it along the imaginary axis."""
        return self.spec1.drift + self.r * self.spec2.drift


def _aux_from_phis(theta, phi1, phi2m, r):
    return -theta / phi1 + r * theta / phi2m


def aux_exponent(aux: AuxModel, theta):
    """``psi_r(theta)`` on the imaginary axis; ``-k_r`` in the limit ``theta -> 0``."""
    th = np.asarray(theta, dtype=complex)
    if np.any(np.abs(th.real) > 0):
        raise ValueError("aux_exponent is defined on the imaginary axis")
    small = np.abs(th) < AXIS_LIMIT_CUTOFF
    safe = np.where(small, 1j, th)
    val = _aux_from_phis(safe, phi_inverse(aux.spec1, safe), phi_inverse(aux.spec2, -safe), aux.r)
    val = np.where(small, -aux.killing_rate, val)
    return val.item() if np.ndim(theta) == 0 else val


# --------------------------------------------------------------------------
# Quadrature on the imaginary axis
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureConfig:
    """Node set ``u = inner_scale * sinh(t)``, ``|u| <= outer_limit``.

    ``step`` is the initial spacing in ``t``; it is halved until two
    consecutive refinements agree to ``refine_tol`` (at most ``max_nodes``
    nodes), then the factorization identity is checked against
    ``identity_tol``.
    """

    inner_scale: float = 1e-9
    outer_limit: float = 1e12
    step: float = 0.1
    refine_tol: float = 1e-13
    identity_tol: float = 1e-6
    max_nodes: int = 2**16

    @property
    def t_max(self) -> float:
        return math.asinh(self.outer_limit / self.inner_scale)


@lru_cache(maxsize=64)
def _axis_nodes(spec1, spec2, step: float, inner_scale: float, t_max: float):
    """Nodes, weights and inverse exponents on the positive imaginary half-axis."""
    n = int(math.ceil(t_max / step))
    t = (np.arange(n) + 0.5) * step
    u = inner_scale * np.sinh(t)
    w = inner_scale * np.cosh(t) * step
    phi1 = phi_inverse(spec1, 1j * u)
    phi2m = phi_inverse(spec2, -1j * u)
    for a in (u, w, phi1, phi2m):
        a.setflags(write=False)
    return u, w, phi1, phi2m


class WHFactorEvaluator:
    """Precomputed Cauchy projections for one auxiliary model.

    Immutable after construction; evaluation at many arguments is safe to
    run concurrently.
    """

    def __init__(self, aux: AuxModel, quad: QuadratureConfig | None = None):
        self.aux = aux
        self.quad = quad or QuadratureConfig()
        self.k = aux.killing_rate
        self.A = math.log(self.k / aux.drift_sum)
        self._build()

    # -- construction -------------------------------------------------------

    def _nodes(self, step):
        q = self.quad
        u, w, phi1, phi2m = _axis_nodes(self.aux.spec1, self.aux.spec2, step, q.inner_scale, q.t_max)
        z = 1j * u
        h = self._log_ratio(z, phi1, phi2m)
        # full axis via conjugate symmetry of real exponents
        z_full = np.concatenate([np.conj(z[::-1]), z])
        w_full = np.concatenate([w[::-1], w])
        h_full = np.concatenate([np.conj(h[::-1]), h])
        g0 = h_full - self.A * _q_inf(z_full)
        return z_full, w_full, g0

    def _log_ratio(self, z, phi1, phi2m):
        """``log(-k / psi_r)`` on increasing positive ``Im z`` with continuous phase."""
        ratio = -self.k / _aux_from_phis(z, phi1, phi2m, self.aux.r)
        if np.any(ratio == 0) or not np.all(np.isfinite(ratio)):
            raise QuadratureFailure("-k/psi_r vanishes or overflows on the axis")
        phase = np.unwrap(np.angle(ratio))
        # phase is 0 at the origin
        phase -= 2 * np.pi * np.round(phase[0] / (2 * np.pi))
        if abs(phase[-1]) > 1e-3:
            raise QuadratureFailure(f"nonzero winding of -k/psi_r (end phase {phase[-1]:.3g})")
        return np.log(np.abs(ratio)) + 1j * phase

    def _build(self):
        q = self.quad
        step = q.step
        checks_real = np.array([1e-3, 0.1, 1.0, 10.0, 1e3, 1e6])
        checks_axis = 1j * np.array([0.05, 1.0, 50.0])
        prev = None
        while True:
            self._z, self._w, self._g0 = self._nodes(step)
            self.step = step
            cur = np.concatenate(
                [self.log_plus(checks_real), self.log_plus(checks_axis), self.log_minus(checks_axis)]
            )
            change = np.inf if prev is None else float(np.max(np.abs(cur - prev)))
            if change < q.refine_tol:
                break
            prev = cur
            if 2 * self._z.size > q.max_nodes:
                raise QuadratureFailure(
                    f"projection not converged with {self._z.size} nodes (change {change:.3g})"
                )
            step /= 2

    # -- evaluation ---------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return int(self._z.size)

    def log_ratio_at(self, omega):
        """``log(-k_r / psi_r(i omega))``; the branch agrees with the node values."""
        om = np.atleast_1d(np.asarray(omega, dtype=float))
        z = 1j * np.abs(om)
        psi = _aux_from_phis(z, phi_inverse(self.aux.spec1, z), phi_inverse(self.aux.spec2, -z), self.aux.r)
        ratio = -self.k / psi
        # branch by continuity with the node table
        zpos = self._z[self._z.imag > 0]
        gpos = self._g0[self._z.imag > 0] + self.A * _q_inf(zpos)
        idx = np.clip(np.searchsorted(zpos.imag, np.abs(om)), 0, zpos.size - 1)
        ref = gpos[idx].imag
        val = np.log(ratio)
        val = val + 2j * np.pi * np.round((ref - val.imag) / (2 * np.pi))
        val = np.where(om < 0, np.conj(val), val)
        return val

    def _project(self, s, subtract=None):
        """``-(1/2pi) sum w g(z) s / (z (z - s))`` for each ``s``.

        ``subtract(rows)`` returns a matrix removed from ``g`` for those rows.
        """
        out = np.empty(s.shape, dtype=complex)
        z, w = self._z, self._w
        for lo in range(0, s.size, 128):
            rows = slice(lo, lo + 128)
            sc = s[rows, None]
            g = self._g0[None, :] if subtract is None else self._g0[None, :] - subtract(rows)
            with np.errstate(invalid="ignore", divide="ignore"):
                terms = w[None, :] * g * sc / (z[None, :] * (z[None, :] - sc))
            near = np.abs(z[None, :] - sc) <= 1e-10 * np.abs(sc)
            if np.any(near):
                terms = _patch_removable(terms, near)
            out[lo : lo + 128] = -terms.sum(axis=1) / (2 * np.pi)
        return out

    def _axis_split(self, s):
        on_axis = np.abs(s.real) <= 1e-13 * np.abs(s)
        return on_axis & (s != 0)

    def log_plus(self, s):
        """``log Psi^+(s)`` for ``Re s >= 0``."""
        arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if np.any(arr.real < -1e-13 * np.abs(arr)):
            raise ValueError("Psi^+ is evaluated on Re s >= 0")
        out = np.zeros(arr.shape, dtype=complex)
        axis = self._axis_split(arr)
        interior = (arr != 0) & ~axis
        if np.any(interior):
            si = arr[interior]
            out[interior] = self.A * si / (2 * (si + _Q_SCALE)) + self._project(si)
        if np.any(axis):
            sa = 1j * arr[axis].imag
            c = self.log_ratio_at(sa.imag) - self.A * _q_inf(sa)
            beta = np.abs(sa)
            def adjust(rows, c=c, beta=beta, sa=sa):
                return c[rows, None] * _q_plus(self._z[None, :], sa[rows, None], beta[rows, None])
            out[axis] = self.A * sa / (2 * (sa + _Q_SCALE)) + c + self._project(sa, adjust)
        return _shape_like(out, s)

    def log_minus(self, s):
        """``log Psi^-(s)`` for ``Re s <= 0``."""
        arr = np.atleast_1d(np.asarray(s, dtype=complex))
        if np.any(arr.real > 1e-13 * np.abs(arr)):
            raise ValueError("Psi^- is evaluated on Re s <= 0")
        out = np.zeros(arr.shape, dtype=complex)
        axis = self._axis_split(arr)
        interior = (arr != 0) & ~axis
        if np.any(interior):
            si = arr[interior]
            out[interior] = self.A * si / (2 * (si - _Q_SCALE)) - self._project(si)
        if np.any(axis):
            sa = 1j * arr[axis].imag
            c = self.log_ratio_at(sa.imag) - self.A * _q_inf(sa)
            beta = np.abs(sa)
            def adjust(rows, c=c, beta=beta, sa=sa):
                return c[rows, None] * _q_minus(self._z[None, :], sa[rows, None], beta[rows, None])
            out[axis] = self.A * sa / (2 * (sa - _Q_SCALE)) + c - self._project(sa, adjust)
        return _shape_like(out, s)

    def plus(self, s):
        val = np.exp(self.log_plus(s))
        return _real_if_real(val, s)

    def minus(self, s):
        val = np.exp(self.log_minus(s))
        return _real_if_real(val, s)

    def identity_residual(self, theta, partner: "WHFactorEvaluator | None" = None):
        """``|Psi^+ Psi^- + k_r / psi_r|`` at imaginary ``theta``.

        With ``partner`` (the evaluator of the swapped model at ``1/r``) the
        minus factor is taken as ``partner.plus(-theta)``, an independent
        quadrature; without it the check only exercises the axis formulas.
        """
        th = np.atleast_1d(np.asarray(theta, dtype=complex))
        log_minus = self.log_minus(th) if partner is None else partner.log_plus(-th)
        lhs = np.exp(self.log_plus(th) + log_minus)
        rhs = np.exp(self.log_ratio_at(th.imag))
        return np.abs(lhs - rhs)


def _q_inf(z):
    """``z^2 / (z^2 - b^2)``: equals 0 at the origin and 1 at infinity."""
    return z * z / (z * z - _Q_SCALE**2)


def _q_plus(z, s, beta):
    """Analytic in ``Re z > -beta``, zero at 0, one at ``s``, decaying at infinity."""
    return z * (s + beta) ** 2 / ((z + beta) ** 2 * s)


def _q_minus(z, s, beta):
    return z * (s - beta) ** 2 / ((z - beta) ** 2 * s)


def _patch_removable(terms, near):
    terms = terms.copy()
    rows, cols = np.nonzero(near)
    n = terms.shape[1]
    for i, j in zip(rows, cols):
        left = terms[i, j - 1] if j > 0 else terms[i, j + 1]
        right = terms[i, j + 1] if j + 1 < n else terms[i, j - 1]
        terms[i, j] = 0.5 * (left + right)
    return terms


def _shape_like(out, s):
    return out.item() if np.ndim(s) == 0 else out.reshape(np.shape(s))


def _real_if_real(val, s):
    if not np.iscomplexobj(np.asarray(s)):
        val = np.real(val)
    return val


# --------------------------------------------------------------------------
# Public operations
# --------------------------------------------------------------------------


IDENTITY_CHECK_POINTS = 1j * np.logspace(-2, 3, 16)


@lru_cache(maxsize=512)
def _unchecked(spec1, spec2, r: float, quad: QuadratureConfig | None) -> WHFactorEvaluator:
    return WHFactorEvaluator(AuxModel(spec1, spec2, r), quad)


@lru_cache(maxsize=256)
def evaluator(spec1, spec2, r: float, quad: QuadratureConfig | None = None) -> WHFactorEvaluator:
    """Cached evaluator for ``(spec1, spec2, r)``, checked against its mirror.

    The mirror is the factorization of the swapped model at rate ``1/r``,
    whose plus factor is the minus factor here reflected through the origin.
    """
    ev = _unchecked(spec1, spec2, float(r), quad)
    mirror = _unchecked(spec2, spec1, 1.0 / float(r), quad)
    res = float(np.max(ev.identity_residual(IDENTITY_CHECK_POINTS, mirror)))
    if not res < ev.quad.identity_tol:
        raise QuadratureFailure(f"factorization identity residual {res:.3g} at r={r}")
    ev.residual = res
    return ev


def wh_plus(ev: WHFactorEvaluator, s):
    return ev.plus(s)


def wh_minus(ev: WHFactorEvaluator, s):
    return ev.minus(s)


def wh_limit(spec1: CompoundPoissonSpec, spec2: CompoundPoissonSpec, which: str, s):
    """Closed-form limits of ``Psi_r^+(s)`` as ``r -> inf`` or ``r -> 0``.

    ``r_zero_scaled`` is the limit of ``Psi_r^+(s) / r`` for ``mu1 <= 0 < mu2``.
    """
    mu1, mu2 = mean_drift(spec1), mean_drift(spec2)
    arr = np.asarray(s)
    if which == "r_infinity":
        val = np.ones(arr.shape, dtype=arr.dtype if np.iscomplexobj(arr) else float)
    elif which == "r_zero":
        if mu1 <= 0:
            val = np.zeros(arr.shape, dtype=arr.dtype if np.iscomplexobj(arr) else float)
        else:
            # Phi1(s) / s -> 1 / mu1 at the origin
            safe = np.where(arr == 0, 1.0, arr)
            val = np.where(arr == 0, 1.0, mu1 * phi_inverse(spec1, safe) / safe)
    elif which == "r_zero_scaled":
        if not (mu1 <= 0 < mu2):
            raise DriftError("scaled r -> 0 limit needs mu1 <= 0 < mu2")
        val = mu2 * phi_inverse(spec1, arr) / arr
    else:
        raise ValueError(f"unknown limit {which!r}")
    return val.item() if np.ndim(s) == 0 else val


def psi_plus(spec1, spec2, r: float, s, quad: QuadratureConfig | None = None):
    """``Psi_r^+(s)`` for any ``r in [0, inf]``, routing extreme rates to the limits."""
    if r == math.inf or r > RATE_CEIL:
        return wh_limit(spec1, spec2, "r_infinity", s)
    if r < RATE_FLOOR:
        return wh_limit(spec1, spec2, "r_zero", s)
    return evaluator(spec1, spec2, float(r), quad).plus(s)


# --------------------------------------------------------------------------
# Boundary transforms
# --------------------------------------------------------------------------


def _factor_argument(spec1: CompoundPoissonSpec, s):
    """``psi1(s)``, the argument of the factors, after the domain check.

    Real ``s`` must exceed ``Phi1(0)`` (``s = 0`` is allowed when it is 0).
    Complex ``s`` must have ``Re psi1(s) >= 0``; values within rounding of
    the imaginary axis, as produced on the kernel curve, are snapped onto it.
    """
    arr = np.asarray(s)
    if np.iscomplexobj(arr):
        if np.any(arr.real < 0):
            raise DomainError("complex arguments need Re s >= 0")
        th = _psi(spec1, arr)
        tol = 1e-10 * np.maximum(np.abs(th), 1.0)
        if np.any(th.real < -tol):
            raise DomainError("Re psi1(s) < 0: outside the domain of the factors")
        return np.where(np.abs(th.real) <= tol, 1j * th.imag, th)
    arr = arr.astype(float)
    phi0 = phi_inverse(spec1, 0.0)
    ok = (arr > phi0) | ((arr == 0) & (phi0 == 0))
    if not np.all(ok):
        raise DomainError(f"transform needs s > Phi1(0) = {phi0:.6g}")
    return _psi(spec1, arr)


def _plus(spec1, spec2, r: float, th, quad):
    return psi_plus(spec1, spec2, r, th, quad)


def _divide_by_plus(num: float, spec1, spec2, r: float, th, quad):
    """``num / Psi_r^+(th)``; uses the scaled limit when ``Psi_r^+`` degenerates to 0."""
    if r < RATE_FLOOR and mean_drift(spec1) <= 0:
        return (num / r) / wh_limit(spec1, spec2, "r_zero_scaled", th)
    return num / _plus(spec1, spec2, r, th, quad)


def _linear_factor(spec1, spec2, r2: float, s):
    """``s / (psi1(s) + psi2(r2 s))`` with its value ``1/(mu1 + r2 mu2)`` at 0."""
    arr = np.asarray(s)
    zero = arr == 0
    safe = np.where(zero, 1.0, arr)
    with np.errstate(invalid="ignore", divide="ignore"):
        val = safe / (_psi(spec1, safe) + _psi(spec2, r2 * safe))
    at_zero = mean_drift(spec1) + r2 * mean_drift(spec2)
    if np.any(zero) and at_zero == 0:
        raise DomainError("transform has no limit at s = 0 for this model")
    return np.where(zero, 1.0 / at_zero if at_zero else np.nan, val)


def _pk_factor(spec1, s):
    """``mu1 s / psi1(s)``, the transform of the all-time infimum of company 1."""
    arr = np.asarray(s)
    zero = arr == 0
    safe = np.where(zero, 1.0, arr)
    return np.where(zero, 1.0, mean_drift(spec1) * safe / _psi(spec1, safe))


def _f_hat_r1_zero(spec1, spec2, r1: float, th, quad):
    """Transform of ``U`` at rates ``(r1, 0)`` with ``r1`` finite."""
    mu1, mu2 = mean_drift(spec1), mean_drift(spec2)
    coef = 1.0 if mu1 > 0 else (r1 * mu1 + mu2) / mu2
    if r1 == 0:
        return coef * np.ones_like(th)
    return coef * _plus(spec1, spec2, 1.0 / r1, th, quad)


def _f_hat_zero_r2(spec1, spec2, r2: float, s, th, quad):
    """Transform of ``U`` at rates ``(0, r2)`` with ``r2`` finite."""
    if r2 == 0:
        return np.ones_like(th)
    num = positive_part(mean_drift(spec1)) + r2 * mean_drift(spec2)
    return _linear_factor(spec1, spec2, r2, s) * _divide_by_plus(num, spec1, spec2, r2, th, quad)


def F1_hat(model: RiskModel, s, quad: QuadratureConfig | None = None):
    """``E exp(-s U)`` for the minimal initial capital ``U`` of company 1.

    Real ``s > Phi1(0)``; complex ``s`` with ``Re psi1(s) >= 0`` is accepted
    for kernel-curve evaluation.  Rates equal to 0 or infinity use the
    boundary forms; an infinite ``r2`` gives a defective transform with mass
    ``mu2 / c2``.
    """
    validate_risk(model)
    spec1, spec2 = model.spec1, model.spec2
    r1, r2 = model.r1, model.r2
    th = _factor_argument(spec1, s)
    arr = np.asarray(s)
    if r2.is_infinite:
        if r1.is_infinite:
            val = _pk_factor(spec1, arr)
        else:
            val = _f_hat_r1_zero(spec1, spec2, r1.value, th, quad)
        val = val * mean_drift(spec2) / spec2.drift
    elif r1.is_infinite:
        val = _f_hat_zero_r2(spec1, spec2, r2.value, arr, th, quad) * _pk_factor(spec1, arr)
    elif r2.value == 0:
        val = _f_hat_r1_zero(spec1, spec2, r1.value, th, quad)
    elif r1.value == 0:
        val = _f_hat_zero_r2(spec1, spec2, r2.value, arr, th, quad)
    else:
        mu1, mu2 = mean_drift(spec1), mean_drift(spec2)
        a, b = r1.value, r2.value
        K = positive_part(mu1) - a * b * negative_part(mu1) + b * mu2
        ratio = _divide_by_plus(K, spec1, spec2, b, th, quad) * _plus(spec1, spec2, 1.0 / a, th, quad)
        val = _linear_factor(spec1, spec2, b, arr) * ratio
    val = _real_if_real(np.asarray(val), s)
    return val.item() if np.ndim(s) == 0 else val


def F1_transform(model: RiskModel, s, quad: QuadratureConfig | None = None):
    """``F1(s) = int exp(-s x) phi(x, 0) dx = F1_hat(s) / s`` for ``s != 0``."""
    arr = np.asarray(s)
    if np.any(arr == 0):
        raise DomainError("F1 has a pole at s = 0")
    return F1_hat(model, s, quad) / s


def F2_hat(model: RiskModel, s, quad: QuadratureConfig | None = None):
    """Transform for company 2, from the model with roles exchanged."""
    return F1_hat(model.swapped(), s, quad)


def F2_transform(model: RiskModel, s, quad: QuadratureConfig | None = None):
    return F1_transform(model.swapped(), s, quad)


def _queue_checks(model: QueueModel):
    validate_queue(model)
    if abs(model.rho1 * model.rho2 - 1.0) < 1e-12:
        raise DegenerateModelError("boundary transform is not available for rho1 * rho2 = 1")


def _g_ratio(model: QueueModel, s, quad):
    spec1, spec2 = model.spec1, model.spec2
    th = _factor_argument(spec1, s)
    inv = (
        np.ones_like(th)
        if model.rho1 == 0
        else 1.0 / _plus(spec1, spec2, 1.0 / model.rho1, th, quad)
    )
    return _plus(spec1, spec2, model.rho2, th, quad) * inv


def G1_transform(model: QueueModel, s, quad: QuadratureConfig | None = None):
    """Boundary function ``G1(s) = c2 E(exp(-s W1); W2 = 0) + const * P(W1 = W2 = 0)``."""
    _queue_checks(model)
    mu1, mu2 = mean_drift(model.spec1), mean_drift(model.spec2)
    rho1, rho2 = model.rho1, model.rho2
    # for mu1 < 0 the kernel equation at theta = 0 forces mu2 + mu1 / rho2
    lead = mu2 + rho1 * positive_part(mu1) - (negative_part(mu1) / rho2 if mu1 < 0 else 0.0)
    val = lead / (1.0 - rho1 * rho2) * _g_ratio(model, s, quad)
    val = _real_if_real(np.asarray(val), s)
    return val.item() if np.ndim(s) == 0 else val


def G1_hat(model: QueueModel, s, quad: QuadratureConfig | None = None):
    """``G1(s) / G1(0)`` with ``G1(0) = (mu2 + rho1 mu1) / (1 - rho1 rho2)``.

    Under positive drifts this is ``E exp(-s V)``.
    """
    _queue_checks(model)
    mu1, mu2 = mean_drift(model.spec1), mean_drift(model.spec2)
    g0 = (mu2 + model.rho1 * mu1) / (1.0 - model.rho1 * model.rho2)
    return G1_transform(model, s, quad) / g0


def G2_transform(model: QueueModel, s, quad: QuadratureConfig | None = None):
    return G1_transform(model.swapped(), s, quad)


def G2_hat(model: QueueModel, s, quad: QuadratureConfig | None = None):
    return G1_hat(model.swapped(), s, quad)
