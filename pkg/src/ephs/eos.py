"""Equations of state and the reference environment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonPositiveDensity, NonPositiveTemperature, ParameterError

ADMISSIBLE_FLOOR = 1e-12


@dataclass(frozen=True)
class Environment:
    """Reference temperature and chemical potential for exergy."""

    theta0: float = 1.0
    mu0: float = 0.0

    def __post_init__(self):
        if not self.theta0 > 0:
            raise ParameterError(f"theta0 must be positive, got {self.theta0}")


def check_density(rho, where: str = "") -> np.ndarray:
    rho = np.asarray(rho, dtype=float)
    if not np.all(rho >= ADMISSIBLE_FLOOR):
        bad = int(np.argmin(rho))
        raise NonPositiveDensity(
            f"density {rho[bad]:.3e} at index {bad}{' in ' + where if where else ''}")
    return rho


def check_temperature(theta, where: str = "") -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if not np.all(theta >= ADMISSIBLE_FLOOR):
        bad = int(np.argmin(theta))
        raise NonPositiveTemperature(
            f"temperature {theta[bad]:.3e} at index {bad}{' in ' + where if where else ''}")
    return theta


@dataclass(frozen=True)
class Polytropic:
    """Barotropic closure U = K rho^gamma / (gamma - 1)."""

    K: float = 1.0
    gamma: float = 2.0

    def __post_init__(self):
        if not (self.K > 0 and self.gamma > 1):
            raise ParameterError("polytropic EOS needs K > 0 and gamma > 1")

    def U(self, rho):
        return self.K * rho ** self.gamma / (self.gamma - 1.0)

    def mu(self, rho):
        return self.K * self.gamma * rho ** (self.gamma - 1.0) / (self.gamma - 1.0)

    def pressure(self, rho):
        return self.mu(rho) * rho - self.U(rho)

    def sound_speed2(self, rho):
        return self.K * self.gamma * rho ** (self.gamma - 1.0)


@dataclass(frozen=True)
class IdealGas:
    """Closure with entropy density sigma: U = K rho^gamma exp(sigma / (c_v rho)).

    Temperature is U / (c_v rho), which is positive on every state with
    positive density.
    """

    c_v: float = 1.0
    gamma: float = 1.4
    K: float = 1.0

    def __post_init__(self):
        if not (self.K > 0 and self.gamma > 1 and self.c_v > 0):
            raise ParameterError("ideal-gas EOS needs K > 0, gamma > 1, c_v > 0")

    def U(self, sigma, rho):
        return self.K * rho ** self.gamma * np.exp(sigma / (self.c_v * rho))

    def theta(self, sigma, rho):
        return self.U(sigma, rho) / (self.c_v * rho)

    def mu(self, sigma, rho):
        return self.U(sigma, rho) / rho * (self.gamma - sigma / (self.c_v * rho))

    def pressure(self, sigma, rho):
        return (self.gamma - 1.0) * self.U(sigma, rho)

    def pressure_identity(self, sigma, rho):
        """theta sigma + mu rho - U, which equals the pressure."""
        return self.theta(sigma, rho) * sigma + self.mu(sigma, rho) * rho - self.U(sigma, rho)
