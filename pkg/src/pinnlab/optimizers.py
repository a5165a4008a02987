"""Optimizers over flat parameter vectors: Adam and limited-memory BFGS.

L-BFGS uses the standard two-loop recursion with a strong-Wolfe line search
(bracket + zoom, cubic interpolation). Curvature pairs with s'y <= 0 are
skipped. When the line search cannot satisfy the Wolfe conditions within its
trial budget it falls back to the best sufficient-decrease step it saw, or
to a small gradient step as a last resort.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import NumericError


class AdamState:
    """Bias-corrected Adam; beta1=0.9, beta2=0.999, eps=1e-8 by default."""

    def __init__(self, n_params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.m = np.zeros(n_params)
        self.v = np.zeros(n_params)
        self.t = 0
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps

    def step(self, params, grad, lr):
        grad = np.asarray(grad)
        if not np.all(np.isfinite(grad)):
            raise NumericError("non-finite gradient passed to adam")
        if grad.shape != params.shape:
            raise NumericError("gradient/parameter length mismatch")
        self.t += 1
        self.m = self.beta1 * self.m + (1.0 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1.0 - self.beta2) * grad * grad
        m_hat = self.m / (1.0 - self.beta1**self.t)
        v_hat = self.v / (1.0 - self.beta2**self.t)
        return params - lr * m_hat / (np.sqrt(v_hat) + self.eps)


@dataclass
class LineSearchInfo:
    success: bool
    alpha: float
    n_evals: int
    fallback: str = ""


def _cubic_min(a, fa, ga, b, fb, gb):
    """Minimizer of the cubic through (a, fa, ga), (b, fb, gb); None if ill-posed."""
    d1 = ga + gb - 3.0 * (fa - fb) / (a - b)
    disc = d1 * d1 - ga * gb
    if disc < 0:
        return None
    d2 = np.sqrt(disc)
    if b < a:
        d2 = -d2
    denom = gb - ga + 2.0 * d2
    if denom == 0:
        return None
    x = b - (b - a) * (gb + d2 - d1) / denom
    return x if np.isfinite(x) else None


def strong_wolfe(evaluate, f0, g0, alpha0=1.0, c1=1e-4, c2=0.9, max_trials=20):
    """Find alpha satisfying the strong Wolfe conditions for phi(alpha).

    ``evaluate(alpha) -> (phi, dphi)`` where dphi is the directional
    derivative. Returns (alpha, phi, info); alpha = 0 signals total failure.
    """
    phi0, dphi0 = f0, g0
    if dphi0 >= 0:
        return 0.0, phi0, LineSearchInfo(False, 0.0, 0, "non-descent direction")

    alpha_prev, phi_prev, dphi_prev = 0.0, phi0, dphi0
    alpha = alpha0
    best_alpha, best_phi = 0.0, phi0
    n_evals = 0

    def zoom(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi, n_evals):
        nonlocal best_alpha, best_phi
        for _ in range(max_trials):
            a = _cubic_min(lo, phi_lo, dphi_lo, hi, phi_hi, dphi_hi)
            span = abs(hi - lo)
            lo_, hi_ = min(lo, hi), max(lo, hi)
            if a is None or not (lo_ + 0.1 * span <= a <= hi_ - 0.1 * span):
                a = 0.5 * (lo + hi)
            phi_a, dphi_a = evaluate(a)
            n_evals += 1
            if phi_a < best_phi:
                best_alpha, best_phi = a, phi_a
            if phi_a > phi0 + c1 * a * dphi0 or phi_a >= phi_lo:
                hi, phi_hi, dphi_hi = a, phi_a, dphi_a
            else:
                if abs(dphi_a) <= -c2 * dphi0:
                    return a, phi_a, LineSearchInfo(True, a, n_evals)
                if dphi_a * (hi - lo) >= 0:
                    hi, phi_hi, dphi_hi = lo, phi_lo, dphi_lo
                lo, phi_lo, dphi_lo = a, phi_a, dphi_a
            if span < 1e-16:
                break
        return None, None, LineSearchInfo(False, 0.0, n_evals, "zoom exhausted")

    for _ in range(max_trials):
        phi_a, dphi_a = evaluate(alpha)
        n_evals += 1
        if phi_a < best_phi:
            best_alpha, best_phi = alpha, phi_a
        if phi_a > phi0 + c1 * alpha * dphi0 or (n_evals > 1 and phi_a >= phi_prev):
            a, f, info = zoom(alpha_prev, phi_prev, dphi_prev, alpha, phi_a, dphi_a, n_evals)
            if a is not None:
                return a, f, info
            break
        if abs(dphi_a) <= -c2 * dphi0:
            return alpha, phi_a, LineSearchInfo(True, alpha, n_evals)
        if dphi_a >= 0:
            a, f, info = zoom(alpha, phi_a, dphi_a, alpha_prev, phi_prev, dphi_prev, n_evals)
            if a is not None:
                return a, f, info
            break
        alpha_prev, phi_prev, dphi_prev = alpha, phi_a, dphi_a
        alpha *= 2.0

    if best_alpha > 0 and best_phi < phi0:
        return best_alpha, best_phi, LineSearchInfo(False, best_alpha, n_evals, "best-found step")
    return 0.0, phi0, LineSearchInfo(False, 0.0, n_evals, "line search failed")


class LbfgsState:
    """Two-loop recursion over the last ``memory`` curvature pairs."""

    def __init__(self, memory=10, c1=1e-4, c2=0.9, max_line_search=20):
        self.memory = memory
        self.c1 = c1
        self.c2 = c2
        self.max_line_search = max_line_search
        self.pairs = deque(maxlen=memory)  # (s, y, 1/s'y)

    def direction(self, grad):
        q = -np.asarray(grad, dtype=np.float64)
        if not self.pairs:
            return q
        alphas = []
        for s, y, rho in reversed(self.pairs):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q = q - a * y
        s, y, _ = self.pairs[-1]
        gamma = np.dot(s, y) / np.dot(y, y)
        q = gamma * q
        for (s, y, rho), a in zip(self.pairs, reversed(alphas)):
            b = rho * np.dot(y, q)
            q = q + (a - b) * s
        return q

    def step(self, params, f0, g0, evaluate):
        """One quasi-Newton step.

        ``evaluate(vec) -> (loss, grad)`` must be deterministic while the
        line search runs. Returns (new_params, f_new, g_new, info).
        """
        g0 = np.asarray(g0)
        d = self.direction(g0)
        dphi0 = float(np.dot(g0, d))
        cache = {}

        def phi(alpha):
            trial = params + alpha * d
            f, g = evaluate(trial)
            cache[alpha] = (trial, f, g)
            return f, float(np.dot(g, d))

        alpha, f_new, info = strong_wolfe(
            phi, f0, dphi0, alpha0=1.0, c1=self.c1, c2=self.c2,
            max_trials=self.max_line_search,
        )
        if alpha == 0.0:
            # last resort: a small gradient step keeps the run moving
            gn = float(np.linalg.norm(g0))
            alpha = 1e-4 / max(gn, 1.0)
            trial = params - alpha * g0
            f_new, g_new = evaluate(trial)
            info = LineSearchInfo(False, alpha, info.n_evals + 1, "scaled gradient step")
            new_params = trial
        else:
            new_params, f_new, g_new = cache[alpha]

        s = new_params - params
        y = g_new - g0
        sy = float(np.dot(s, y))
        if sy > 1e-16:
            self.pairs.append((s, y, 1.0 / sy))
        return new_params, f_new, g_new, info
