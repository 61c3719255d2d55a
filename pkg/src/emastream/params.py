"""Run parameters and error types shared across the package."""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

# Numeric slack for ea2 - ea1**2 round-off.
TAU_VAR = 1e-12

NORMALIZERS = ("rho", "xi")


class ParamError(ValueError):
    """Raised when a parameter set violates its invariants."""


class DimensionError(ValueError):
    """Raised when a point and a summary disagree on dimensionality."""


class NonFiniteError(ValueError):
    """Raised when an input vector holds NaN or Inf."""


class ConsistencyError(ArithmeticError):
    """Raised when a summary's variance drops below zero beyond round-off."""


@dataclass(frozen=True)
class Params:
    """Clustering parameters.

    Defaults follow the reference parameter table (N=200, pi=30, mu=10,
    beta=0.2, xi=0.002, 1000 initial points, eps=10, H=1). ``alpha``
    defaults to ``2 / (1 + n_window)`` when left as ``None``.
    """

    n_window: int = 200
    alpha: float | None = None
    xi: float = 0.002
    rho: float = 1000.0
    eps: float = 10.0
    mu: int = 10
    pi_dim: int = 30
    beta: float = 0.2
    horizon: int = 1
    initial_points: int = 1000
    lam: float = 0.2324
    burst_fraction: float = 0.9
    decay_weight: bool = True
    distance_normalizer: str = "rho"
    _alpha_explicit: bool = field(default=False, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.alpha is None:
            object.__setattr__(self, "alpha", 2.0 / (1.0 + self.n_window))
        else:
            object.__setattr__(self, "_alpha_explicit", True)
        self._validate()

    def _validate(self):
        if int(self.n_window) != self.n_window or self.n_window < 1:
            raise ParamError(f"n_window must be a positive integer, got {self.n_window!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ParamError(f"alpha must lie in (0, 1), got {self.alpha!r}")
        if not 0.0 < self.beta < 1.0:
            raise ParamError(f"beta must lie in (0, 1), got {self.beta!r}")
        if self.xi <= 0:
            raise ParamError("xi must be positive")
        if self.rho <= 1:
            raise ParamError("rho must exceed 1")
        if self.eps <= 0:
            raise ParamError("eps must be positive")
        if self.mu < 1 or int(self.mu) != self.mu:
            raise ParamError("mu must be a positive integer")
        if self.pi_dim < 1 or int(self.pi_dim) != self.pi_dim:
            raise ParamError("pi_dim must be a positive integer")
        if self.horizon < 1 or int(self.horizon) != self.horizon:
            raise ParamError("horizon must be a positive integer")
        if self.initial_points < 0:
            raise ParamError("initial_points must be non-negative")
        if self.lam <= 0:
            raise ParamError("lam must be positive")
        if not 0.0 < self.burst_fraction:
            raise ParamError("burst_fraction must be positive")
        if self.distance_normalizer not in NORMALIZERS:
            raise ParamError(
                f"distance_normalizer must be one of {NORMALIZERS}, got {self.distance_normalizer!r}"
            )

    @property
    def eta(self) -> float:
        """Divisor used by the point-to-summary projected distance."""
        return self.rho if self.distance_normalizer == "rho" else self.xi

    @property
    def beta_mu(self) -> float:
        return self.beta * self.mu

    def check_dim(self, d: int) -> None:
        if self.pi_dim > d:
            raise ParamError(f"pi_dim={self.pi_dim} exceeds data dimensionality {d}")

    def with_(self, **changes) -> "Params":
        """Copy with changes; ``alpha`` is re-derived unless set explicitly."""
        if "alpha" not in changes and not self._alpha_explicit:
            changes["alpha"] = None
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self) if not f.name.startswith("_")}
