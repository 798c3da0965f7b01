"""Laplace exponents, their inverses and the kernel-equation coefficients.

All functions accept scalars or numpy arrays and broadcast elementwise.
Complex arguments are supported wherever the transform is defined.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, DriftError, NoConvergenceError, OnKernelCurveError
from .model import CONTINUABLE, CompoundPoissonSpec, QueueModel, RiskModel, mean_drift

ROOT_RTOL = 1e-12
CONTINUATION_STEPS = 64
CONTINUATION_ATOL = 1e-10


def _as_output(x, like):
    """Return a Python scalar when the input was scalar."""
    if np.ndim(like) == 0:
        return x.item() if isinstance(x, np.ndarray) else x
    return x


def _psi(spec: CompoundPoissonSpec, s):
    """Exponent without domain checks (used inside root finders)."""
    return spec.drift * s + spec.rate * spec.jumps.transform_minus_one(s)


def _dpsi(spec: CompoundPoissonSpec, s):
    return spec.drift + spec.rate * spec.jumps.transform_derivative(s)


def laplace_exponent(spec: CompoundPoissonSpec, s):
    """``psi(s) = c s + lambda (E e^{-sJ} - 1)`` for ``Re s >= 0``."""
    arr = np.asarray(s)
    if np.any(np.real(arr) < 0):
        raise DomainError("laplace_exponent needs Re s >= 0")
    return _as_output(_psi(spec, arr), s)


def laplace_exponent_derivative(spec: CompoundPoissonSpec, s):
    arr = np.asarray(s)
    if np.any(np.real(arr) < 0):
        raise DomainError("derivative needs Re s >= 0")
    return _as_output(_dpsi(spec, arr), s)


# --------------------------------------------------------------------------
# Inverse exponent
# --------------------------------------------------------------------------


def _real_root(spec: CompoundPoissonSpec, theta: np.ndarray) -> np.ndarray:
    """Largest real root of ``psi(s) = theta`` for real ``theta >= 0``.

    Newton started right of the root decreases monotonically to it because
    ``psi`` is convex and increasing there.
    """
    c, lam = spec.drift, spec.rate
    s = (theta + lam) / c + 1.0
    for _ in range(200):
        step = (_psi(spec, s) - theta) / _dpsi(spec, s)
        s = s - step
        if np.all(np.abs(step) <= 1e-15 * np.maximum(np.abs(s), 1e-300)):
            break
    # zero is the root when mu >= 0 and theta == 0
    if mean_drift(spec) >= 0:
        s = np.where(theta == 0, 0.0, s)
    return s


def _newton_polish(spec, s, theta, iters=6):
    for _ in range(iters):
        s = s - (_psi(spec, s) - theta) / _dpsi(spec, s)
    return s


def _continue_scalar(spec, theta: complex, start: complex, theta0: float) -> complex:
    """Adaptive predictor-corrector along ``theta0 -> theta`` with step halving."""
    tau, dtau, s = 0.0, 1.0 / CONTINUATION_STEPS, complex(start)
    d_theta = theta - theta0
    for _ in range(100_000):
        if tau >= 1.0:
            break
        dtau = min(dtau, 1.0 - tau)
        target = theta0 + (tau + dtau) * d_theta
        cand = s + dtau * d_theta / _dpsi(spec, s)
        ok = False
        for _ in range(12):
            step = (_psi(spec, cand) - target) / _dpsi(spec, cand)
            cand -= step
            if abs(step) <= 1e-14 * max(1.0, abs(cand)):
                ok = True
                break
        if ok and abs(cand - s) <= 0.5 * max(abs(s), abs(cand), 1e-12) + 1e-12:
            s, tau = cand, tau + dtau
            dtau *= 1.5
        else:
            dtau *= 0.5
            if dtau < 1e-12:
                break
    if tau < 1.0:
        raise NoConvergenceError(f"continuation to theta={theta} stalled at tau={tau}")
    return s


def phi_inverse(spec: CompoundPoissonSpec, theta):
    """Right inverse ``Phi(theta)`` of the Laplace exponent for ``Re theta >= 0``.

    Real ``theta`` gives the largest real root (``Phi(0) > 0`` iff the drift
    is negative).  Complex ``theta`` is reached by tracking the root along
    the segment from ``|theta|`` with Euler prediction and Newton correction.
    """
    th = np.asarray(theta)
    if np.any(np.real(th) < 0):
        raise DomainError("phi_inverse needs Re theta >= 0")
    if spec.rate == 0.0:
        return _as_output(th / spec.drift, theta)
    if not isinstance(spec.jumps, CONTINUABLE):
        raise DomainError(
            f"inverse exponent is not validated for {type(spec.jumps).__name__} jumps"
        )
    if not np.iscomplexobj(th):
        thr = th.astype(float)
        return _as_output(_real_root(spec, thr), theta)

    flat = th.astype(complex).ravel()
    theta0 = np.abs(flat)
    s = _real_root(spec, theta0).astype(complex)
    d_theta = flat - theta0
    moving = np.abs(d_theta) > 0
    if np.any(moving):
        sm, t0m, dm = s[moving], theta0[moving], d_theta[moving]
        for k in range(1, CONTINUATION_STEPS + 1):
            target = t0m + (k / CONTINUATION_STEPS) * dm
            sm = sm + (dm / CONTINUATION_STEPS) / _dpsi(spec, sm)
            sm = _newton_polish(spec, sm, target, iters=3)
        sm = _newton_polish(spec, sm, flat[moving], iters=4)
        s[moving] = sm
    resid = np.abs(_psi(spec, s) - flat)
    phi0 = _real_root(spec, np.zeros(1))[0]
    bad = (
        ~np.isfinite(s)
        | (resid > ROOT_RTOL * np.maximum(1.0, np.abs(flat)))
        | (s.real < phi0 - 1e-9 * max(1.0, phi0))
    )
    for i in np.flatnonzero(bad):
        s[i] = _continue_scalar(spec, complex(flat[i]), complex(_real_root(spec, theta0[i : i + 1])[0]), float(theta0[i]))
        s[i] = _newton_polish(spec, s[i], flat[i], iters=3)
        r = abs(_psi(spec, s[i]) - flat[i])
        if r > CONTINUATION_ATOL * max(1.0, abs(flat[i])) or s[i].real < phi0 - 1e-9 * max(1.0, phi0):
            raise NoConvergenceError(f"inverse exponent failed at theta={flat[i]} (residual {r:.3g})")
    return _as_output(s.reshape(th.shape), theta)


# --------------------------------------------------------------------------
# Pollaczek-Khinchine baseline
# --------------------------------------------------------------------------


def pk_transform(spec: CompoundPoissonSpec, theta):
    """``mu theta / psi(theta)``: transform of ``-inf_t X(t)``.

    Equals 1 at ``theta = 0`` and ``mu / c`` at ``theta = inf``.
    """
    mu = mean_drift(spec)
    if mu <= 0:
        raise DriftError(f"Pollaczek-Khinchine transform needs mu > 0, got {mu}")
    th = np.asarray(theta)
    if np.any(np.real(th) < 0):
        raise DomainError("pk_transform needs theta >= 0")
    with np.errstate(invalid="ignore", divide="ignore"):
        val = mu * th / _psi(spec, th)
    val = np.where(th == 0, 1.0, val)
    val = np.where(np.isinf(np.real(th)), mu / spec.drift, val)
    return _as_output(val, theta)


# --------------------------------------------------------------------------
# Kernel equations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class KernelCoefficients:
    """Multipliers of the two boundary functions in the kernel equation."""

    A1: complex
    A2: complex


def _difference_quotient(spec, a, b):
    """``(psi(a) - psi(b)) / (a - b)`` with the removable singularity resolved."""
    a, b = np.asarray(a), np.asarray(b)
    d = a - b
    near = np.abs(d) <= 1e-7 * (1.0 + np.abs(a) + np.abs(b))
    with np.errstate(invalid="ignore", divide="ignore"):
        q = (_psi(spec, a) - _psi(spec, b)) / np.where(near, 1.0, d)
    # midpoint derivative is second-order accurate on the excluded band
    return np.where(near, _dpsi(spec, 0.5 * (a + b)), q)


def _rate_coefficient(spec_other, s_other, rate, s_self):
    """``(psi_o(s_o) - psi_o(r s)) / (s_o - r s)`` read in the limiting sense for r = inf."""
    if rate.is_infinite:
        return np.full(np.broadcast(np.asarray(s_other), np.asarray(s_self)).shape, spec_other.drift, dtype=complex)
    return _difference_quotient(spec_other, s_other, rate.value * np.asarray(s_self))


def kernel_coeff_risk(model: RiskModel, s1, s2) -> KernelCoefficients:
    a1, a2 = np.asarray(s1), np.asarray(s2)
    if np.any(np.real(a1) < 0) or np.any(np.real(a2) < 0):
        raise DomainError("kernel coefficients need Re s1, Re s2 >= 0")
    A1 = _rate_coefficient(model.spec2, a2, model.r2, a1)
    A2 = _rate_coefficient(model.spec1, a1, model.r1, a2)
    return KernelCoefficients(_as_output(A1, s1), _as_output(A2, s1))


def kernel_coeff_queue(model: QueueModel, s1, s2) -> KernelCoefficients:
    from .errors import DegenerateModelError

    if abs(model.rho1 * model.rho2 - 1.0) < 1e-12:
        raise DegenerateModelError("queue kernel equation differs when rho1 * rho2 = 1")
    return KernelCoefficients(s2 - model.rho2 * s1, s1 - model.rho1 * s2)


def kernel_curve(spec1: CompoundPoissonSpec, spec2: CompoundPoissonSpec, theta):
    """Points ``(Phi1(theta), Phi2(-theta))`` on which ``psi1(s1) + psi2(s2) = 0``."""
    th = np.asarray(theta, dtype=complex)
    if np.any(np.abs(th.real) > 1e-300) or np.any(th == 0):
        raise DomainError("kernel curve is parametrised by nonzero imaginary theta")
    s1 = phi_inverse(spec1, th)
    s2 = phi_inverse(spec2, -th)
    return _as_output(np.asarray(s1), theta), _as_output(np.asarray(s2), theta)


def bivariate_from_kernel(spec1, spec2, s1, s2, coeffs: KernelCoefficients, F1, F2):
    """Solve the kernel equation for the bivariate transform."""
    denom = _psi(spec1, np.asarray(s1)) + _psi(spec2, np.asarray(s2))
    if np.any(np.abs(denom) < 1e-12):
        raise OnKernelCurveError("psi1(s1) + psi2(s2) vanishes")
    return _as_output((coeffs.A1 * F1 + coeffs.A2 * F2) / denom, s1)
