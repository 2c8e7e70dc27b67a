"""True closed-loop system: ARMAX plant, output feedback, input perturbation.

Alongside the perturbed loop a nominal twin (``d == 0``) is driven by the
same noise sequence; since everything is linear, their output difference is
exactly the output perturbation caused by ``d``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .poly import Polynomial, filter_step

_ONE = Polynomial.one()

TRAJECTORY_COLUMNS = ("t", "r", "u", "d", "u_tilde", "y_tilde", "delta", "e")


class SimulationError(RuntimeError):
    """Raised when the simulated loop produces non-finite values."""


@dataclass(frozen=True)
class ArmaxModel:
    """``A y = B u + C e`` with ``e`` white, standard deviation ``noise_std``."""

    b: Polynomial
    a: Polynomial
    c: Polynomial
    noise_std: float = 0.0

    def __post_init__(self):
        if not self.b.is_strictly_delayed:
            raise ValueError("B must be strictly delayed (b_0 == 0)")
        if not self.a.is_monic or not self.c.is_monic:
            raise ValueError("A and C must be monic")
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")

    @classmethod
    def from_coefficients(cls, b, a, c=(), noise_std=0.0) -> ArmaxModel:
        """Build from the free coefficients ``b_1.., a_1.., c_1..``."""
        return cls(
            Polynomial.delayed(b), Polynomial.monic(a), Polynomial.monic(c), noise_std
        )

    @property
    def orders(self) -> tuple[int, int, int]:
        """``(n_b, n_a, n_c)``"""
        return self.b.degree, self.a.degree, self.c.degree

    @property
    def noise_variance(self) -> float:
        return self.noise_std**2


@dataclass(frozen=True)
class Controller:
    """Output feedback ``u = L(q)/M(q) (r - y)``."""

    l: Polynomial
    m: Polynomial

    def __post_init__(self):
        if not self.m.is_monic:
            raise ValueError("M must be monic")


def theta_vector(model: ArmaxModel) -> np.ndarray:
    """``[b_1..b_nb, a_1..a_na, c_1..c_nc]``"""
    return np.concatenate((model.b.coeffs[1:], model.a.coeffs[1:], model.c.coeffs[1:]))


def unpack_theta(
    theta: Sequence[float], orders: tuple[int, int, int], noise_std: float = 0.0
) -> ArmaxModel:
    nb, na, nc = orders
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (nb + na + nc,):
        raise ValueError(
            f"theta has length {theta.size}, expected {nb + na + nc} for orders "
            f"(nb={nb}, na={na}, nc={nc})"
        )
    return ArmaxModel.from_coefficients(
        theta[:nb], theta[nb : nb + na], theta[nb + na :], noise_std
    )


def _push(buf: list, value: float) -> list:
    return [value] + buf[:-1]


class ClosedLoop:
    """Mutable state of the perturbed loop and its nominal twin.

    Time advances in two halves so that the controller output ``u_t`` is
    available to a perturbation designer before ``d_t`` is chosen::

        u_t = loop.control(r_t)
        y_next, delta_next, u_tilde = loop.advance(d_t, e_next)

    All buffers start at zero.
    """

    def __init__(self, model: ArmaxModel, ctrl: Controller):
        self.model = model
        self.ctrl = ctrl
        depth = 1 + max(model.a.degree, model.b.degree, model.c.degree,
                        ctrl.l.degree, ctrl.m.degree, 1)
        self.t = 0
        # index 0 is the most recent sample
        self._y = [0.0] * depth       # y~_t, y~_{t-1}, ...
        self._yn = [0.0] * depth      # nominal twin output
        self._ut = [0.0] * depth      # 0 placeholder, u~_{t-1}, ...
        self._un = [0.0] * depth      # twin plant input, same layout
        self._err = [0.0] * depth     # r_t - y~_t, ...
        self._errn = [0.0] * depth
        self._u = [0.0] * depth       # u_{t-1}, u_{t-2}, ... (controller outputs)
        self._unc = [0.0] * depth     # twin controller outputs
        self._e = [0.0] * depth       # e_t, e_{t-1}, ...
        self._r = 0.0
        self._u_now: float | None = None
        self._un_now = 0.0

    @property
    def y(self) -> float:
        """Current measured output ``y~_t``."""
        return self._y[0]

    @property
    def delta(self) -> float:
        """Current output perturbation ``y~_t - y_t``."""
        return self._y[0] - self._yn[0]

    @property
    def e(self) -> float:
        return self._e[0]

    def control(self, r_t: float) -> float:
        """Controller output ``u_t = K (r_t - y~_t)``."""
        if not math.isfinite(r_t):
            raise SimulationError(f"non-finite reference r={r_t} at t={self.t}")
        l, m = self.ctrl.l, self.ctrl.m
        self._r = r_t
        self._err = _push(self._err, r_t - self._y[0])
        self._errn = _push(self._errn, r_t - self._yn[0])
        self._u_now = filter_step(l, m, self._err, self._u)
        self._un_now = filter_step(l, m, self._errn, self._unc)
        return self._u_now

    def advance(self, d_t: float, e_next: float) -> tuple[float, float, float]:
        """Apply ``u~_t = u_t + d_t`` and step the plant to ``t + 1``.

        Returns ``(y~_{t+1}, delta_{t+1}, u~_t)``.
        """
        if self._u_now is None:
            raise RuntimeError("control() must be called before advance()")
        if not (math.isfinite(d_t) and math.isfinite(e_next)):
            raise SimulationError(f"non-finite input d={d_t}, e={e_next} at t={self.t}")
        model = self.model
        u_tilde = self._u_now + d_t
        self._u = _push(self._u, self._u_now)
        self._unc = _push(self._unc, self._un_now)
        self._ut[0] = u_tilde
        self._un[0] = self._un_now
        self._e = _push(self._e, e_next)
        noise = filter_step(model.c, _ONE, self._e, ())
        # b_0 == 0, so the placeholder in front never contributes
        ut = [0.0] + self._ut[:-1]
        un = [0.0] + self._un[:-1]
        y_next = filter_step(model.b, model.a, ut, self._y) + noise
        yn_next = filter_step(model.b, model.a, un, self._yn) + noise
        if not (math.isfinite(y_next) and math.isfinite(yn_next)):
            raise SimulationError(
                f"non-finite output at t={self.t + 1}: y={y_next}, u_tilde={u_tilde}"
            )
        self._ut = ut
        self._un = un
        self._y = _push(self._y, y_next)
        self._yn = _push(self._yn, yn_next)
        self._u_now = None
        self.t += 1
        return y_next, y_next - yn_next, u_tilde

    def step(self, r_t: float, d_t: float, e_next: float) -> tuple[float, float, float]:
        """``control`` followed by ``advance``."""
        self.control(r_t)
        return self.advance(d_t, e_next)


def loop_step(state: ClosedLoop, r_t: float, d_t: float, e_t: float):
    """Functional alias of :meth:`ClosedLoop.step`."""
    return state.step(r_t, d_t, e_t)


def write_trajectory(path: str | Path, rows: Iterable[Sequence[float]]) -> None:
    """Write rows ordered as :data:`TRAJECTORY_COLUMNS` with 17 significant digits."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for row in rows:
            writer.writerow([int(row[0])] + [f"{float(v):.17g}" for v in row[1:]])


def read_trajectory(path: str | Path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(TRAJECTORY_COLUMNS) - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing trajectory columns {sorted(missing)}")
        rows = list(reader)
    return {col: np.array([float(r[col]) for r in rows]) for col in TRAJECTORY_COLUMNS}
