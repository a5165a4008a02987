"""Trust-region calibration: gradient ring buffer and width schedule.

The neighborhood width starts at r0 / sigma with sigma = 1 and is re-scaled
after every step: sigma becomes the L2 norm of the per-coordinate population
standard deviation over the most recent T0 parameter gradients. A zero
variance buffer (first iteration, or a frozen run) would blow the division
up, so sigma is floored and the resulting width clamped to
[width_floor, width_cap]; the cap defaults to the smallest domain side.
r0 = 0 short-circuits to width 0, the pointwise regime.
"""

from __future__ import annotations

from collections import deque

import numpy as np

from .errors import ConfigError

SIGMA_FLOOR = 1e-12


class TrustRegionState:
    def __init__(self, r0, capacity, width_cap, width_floor=1e-10, sigma0=1.0):
        if r0 < 0:
            raise ConfigError("r0 must be nonnegative")
        if capacity < 1:
            raise ConfigError("buffer capacity must be at least 1")
        self.r0 = float(r0)
        self.sigma = float(sigma0)
        self.capacity = int(capacity)
        self.width_floor = float(width_floor)
        self.width_cap = float(width_cap)
        self.buffer = deque(maxlen=self.capacity)

    def effective_width(self):
        if self.r0 == 0.0:
            return 0.0
        width = self.r0 / max(self.sigma, SIGMA_FLOOR)
        return min(max(width, self.width_floor), self.width_cap)


def calibrate(state: TrustRegionState, grad) -> TrustRegionState:
    """Push a gradient snapshot and refresh sigma from the buffer.

    sigma is the L2 norm of the per-coordinate population standard deviation
    (divide by n) over the buffered gradients, floored at 1e-12.
    """
    grad = np.asarray(grad, dtype=np.float64)
    if state.buffer and grad.shape != state.buffer[-1].shape:
        raise ConfigError("gradient length changed between iterations")
    state.buffer.append(grad.copy())
    stack = np.stack(state.buffer)
    sigma = float(np.linalg.norm(np.std(stack, axis=0)))
    state.sigma = max(sigma, SIGMA_FLOOR)
    return state
