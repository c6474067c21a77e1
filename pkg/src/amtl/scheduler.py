"""Relaxation step sizes and the delay-driven dynamic multiplier."""

import collections
import math
from dataclasses import dataclass, field

from .errors import ConfigurationError

DELAY_FLOOR = 10.0


@dataclass(frozen=True)
class StepPolicy:
    """
    Step-size configuration.

    Parameters
    ----------
    eta : float
        Prox threshold scale and forward step; must lie in ``(0, 2/L)``.
    eta_min : float
        Lower end of the admissible relaxation interval.
    c : float
        Constant in ``(0, 1)`` for the relaxation cap ``c / (2 tau / sqrt(T) + 1)``.
    tau_max : int
        Declared bound on staleness (updates by other tasks between a read
        and the matching write).
    dynamic : bool
        Scale each relaxation by :func:`dynamic_multiplier`.
    window : int
        Number of recent delays averaged by the multiplier.
    """

    eta: float
    eta_min: float = 1e-4
    c: float = 0.9
    tau_max: int = 0
    dynamic: bool = False
    window: int = 5

    def __post_init__(self):
        if not self.eta > 0:
            raise ConfigurationError(f"eta must be positive, got {self.eta}")
        if not self.eta_min > 0:
            raise ConfigurationError(f"eta_min must be positive, got {self.eta_min}")
        if not 0 < self.c < 1:
            raise ConfigurationError(f"c must lie in (0, 1), got {self.c}")
        if self.tau_max < 0 or int(self.tau_max) != self.tau_max:
            raise ConfigurationError(f"tau_max must be a non-negative integer, got {self.tau_max}")
        if self.window < 1:
            raise ConfigurationError(f"window must be positive, got {self.window}")


def km_cap(c, tau_max, t_count):
    return c / (2.0 * tau_max / math.sqrt(t_count) + 1.0)


def km_step_size(policy, t_count):
    """Constant relaxation ``eta_k``, held at the upper end of the interval."""
    cap = km_cap(policy.c, policy.tau_max, t_count)
    if policy.eta_min > cap:
        raise ConfigurationError(
            f"eta_min={policy.eta_min!r} exceeds the relaxation cap {cap!r} "
            f"(c={policy.c}, tau_max={policy.tau_max}, T={t_count})"
        )
    return max(cap, policy.eta_min)


@dataclass
class DelayHistory:
    """Recent communication delays (seconds) seen by one task."""

    task_id: int = 0
    window: int = 5
    ring: collections.deque = field(default=None)
    count: int = 0
    now: float = 0.0

    def __post_init__(self):
        if self.window < 1:
            raise ValueError(f"window must be positive, got {self.window}")
        self.ring = collections.deque(self.ring or (), maxlen=self.window)

    def mean(self):
        return math.fsum(self.ring) / len(self.ring) if self.ring else 0.0


def record_delay(history, nu, now=None):
    if not nu >= 0:
        raise ValueError(f"delay must be non-negative, got {nu}")
    history.ring.append(float(nu))
    history.count += 1
    if now is not None:
        history.now = now
    return history


def dynamic_multiplier(history):
    """``log10(max(mean recent delay, 10))``; exactly 1 for fast networks."""
    return math.log10(max(history.mean(), DELAY_FLOOR))
