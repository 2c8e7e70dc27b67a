"""Recursive prediction error estimation for ARMAX models.

Gauss-Newton RPEM: the regressor holds past inputs, negated past outputs and
past (a priori) prediction errors; the gradient is that regressor filtered
through ``1 / C(q)`` at the current estimate.
"""

from __future__ import annotations

import json
import math
from typing import Sequence

import numpy as np

from .poly import Polynomial, is_stable

SNAPSHOT_VERSION = 1
C_STABILITY_TOL = 1e-6
MAX_HALVINGS = 30


def forgetting_factor(t: int, base: float = 0.02, decay: float = 0.998) -> float:
    """``1 - base * decay**t``; tends to one."""
    return 1.0 - base * decay**t


class Rpem:
    """Mutable estimator state.

    Parameters
    ----------
    orders : (nb, na, nc)
    theta_init : float
        Every entry of the initial estimate.
    gain_init : float
        Initial gain matrix is ``gain_init * I``.
    lambda_init : float
        Initial noise variance estimate.
    ff_base, ff_decay : float
        Forgetting schedule ``1 - ff_base * ff_decay**t``.
    """

    def __init__(
        self,
        orders: tuple[int, int, int],
        theta_init: float = 1e-3,
        gain_init: float = 1e4,
        lambda_init: float = 1.0,
        ff_base: float = 0.02,
        ff_decay: float = 0.998,
    ):
        nb, na, nc = (int(o) for o in orders)
        if nb < 1:
            raise ValueError("need nb >= 1: the perturbation enters through b_1")
        self.orders = (nb, na, nc)
        self.dim = nb + na + nc
        self.theta = np.full(self.dim, float(theta_init))
        self.gain = gain_init * np.eye(self.dim)
        self.lambda_hat = float(lambda_init)
        self.ff_base = ff_base
        self.ff_decay = ff_decay
        self.t = 0
        self._u = np.zeros(nb)              # u~_{t-1}, ..., u~_{t-nb}
        self._y = np.zeros(na)              # y~_t, ..., y~_{t-na+1}
        self._eps = np.zeros(nc)            # eps_t, ..., eps_{t-nc+1}
        self._psi = np.zeros((max(nc, 1), self.dim))  # psi_t, psi_{t-1}, ...
        self.rejected_steps = 0
        self.c_projections = 0

    @property
    def c_hat(self) -> np.ndarray:
        nb, na, _ = self.orders
        return self.theta[nb + na :]

    @property
    def tau_history(self) -> np.ndarray:
        """First gradient entries ``tau_t, tau_{t-1}, ...`` (length nc)."""
        return self._psi[: self.orders[2], 0]

    def model(self, noise_std: float | None = None):
        from .plant import unpack_theta

        if noise_std is None:
            noise_std = math.sqrt(self.lambda_hat)
        return unpack_theta(self.theta, self.orders, noise_std)

    def regressor(self, u_tilde: float) -> np.ndarray:
        """``phi_{t+1}`` once ``u~_t`` is known."""
        nb = self.orders[0]
        return np.concatenate(([u_tilde], self._u[: nb - 1], -self._y, self._eps))

    def filtered(self, phi: np.ndarray) -> np.ndarray:
        """``phi - c_1 psi_t - ... - c_nc psi_{t-nc+1}`` without touching state."""
        nc = self.orders[2]
        if nc == 0:
            return phi.copy()
        return phi - self.c_hat @ self._psi[:nc]

    def gradient_update(self, phi: np.ndarray) -> np.ndarray:
        """Next gradient; the gradient buffer is rotated."""
        psi = self.filtered(phi)
        self._rotate_psi(psi)
        return psi

    def _rotate_psi(self, psi: np.ndarray) -> None:
        if self._psi.shape[0] > 1:
            self._psi[1:] = self._psi[:-1]
        self._psi[0] = psi

    def step(
        self, y_obs: float, u_obs: float, update: bool = True
    ) -> tuple[np.ndarray, float, np.ndarray]:
        """Absorb ``y~_{t+1}`` and the input ``u~_t`` that produced it.

        Returns ``(theta_hat, eps, psi)`` where ``eps`` is the a priori
        prediction error and ``psi`` the gradient used in the update. A step
        that would produce non-finite numbers leaves the state untouched,
        increments ``rejected_steps`` and returns the unchanged estimate.
        With ``update=False`` only the signal buffers advance; the estimate,
        gain and noise variance stay fixed.
        """
        phi = self.regressor(u_obs)
        eps = y_obs - phi @ self.theta
        psi = self.filtered(phi)
        if update:
            mu = forgetting_factor(self.t + 1, self.ff_base, self.ff_decay)
            p_psi = self.gain @ psi
            denom = mu + psi @ p_psi
            step = p_psi * (eps / denom)
            gain = (self.gain - np.outer(p_psi, p_psi) / denom) / mu
            gain = 0.5 * (gain + gain.T)
            theta = self._project_c(self.theta + step, step)
            lam = mu * self.lambda_hat + (1.0 - mu) * eps * eps
            if not (
                math.isfinite(eps)
                and math.isfinite(theta.sum())
                and math.isfinite(gain.sum())
                and lam > 0.0
            ):
                self.rejected_steps += 1
                return self.theta.copy(), float(eps), psi
            self.theta = theta
            self.gain = gain
            self.lambda_hat = lam
        self._rotate_psi(psi)
        _shift_in(self._u, u_obs)
        _shift_in(self._y, y_obs)
        _shift_in(self._eps, eps)
        self.t += 1
        return self.theta.copy(), float(eps), psi

    def _project_c(self, theta: np.ndarray, step: np.ndarray) -> np.ndarray:
        """Halve the C-block step until C(q) is stable, or drop it."""
        nb, na, nc = self.orders
        if nc == 0:
            return theta
        lo = nb + na
        if _c_stable(theta[lo:]):
            return theta
        self.c_projections += 1
        c_old = self.theta[lo:]
        c_step = step[lo:]
        for _ in range(MAX_HALVINGS):
            c_step = 0.5 * c_step
            if _c_stable(c_old + c_step):
                theta[lo:] = c_old + c_step
                return theta
        theta[lo:] = c_old
        return theta

    def to_dict(self) -> dict:
        return {
            "version": SNAPSHOT_VERSION,
            "orders": list(self.orders),
            "theta": self.theta.tolist(),
            "gain": self.gain.tolist(),
            "lambda_hat": self.lambda_hat,
            "ff_base": self.ff_base,
            "ff_decay": self.ff_decay,
            "t": self.t,
            "u": self._u.tolist(),
            "y": self._y.tolist(),
            "eps": self._eps.tolist(),
            "psi": self._psi.tolist(),
            "rejected_steps": self.rejected_steps,
            "c_projections": self.c_projections,
        }

    @classmethod
    def from_dict(cls, data: dict) -> Rpem:
        if data.get("version") != SNAPSHOT_VERSION:
            raise ValueError(f"unsupported snapshot version {data.get('version')!r}")
        est = cls(tuple(data["orders"]), ff_base=data["ff_base"], ff_decay=data["ff_decay"])
        est.theta = np.array(data["theta"], dtype=float)
        est.gain = np.array(data["gain"], dtype=float)
        est.lambda_hat = float(data["lambda_hat"])
        est.t = int(data["t"])
        est._u = np.array(data["u"], dtype=float)
        est._y = np.array(data["y"], dtype=float)
        est._eps = np.array(data["eps"], dtype=float)
        est._psi = np.array(data["psi"], dtype=float).reshape(est._psi.shape)
        est.rejected_steps = int(data["rejected_steps"])
        est.c_projections = int(data["c_projections"])
        return est


def _shift_in(buf: np.ndarray, value: float) -> None:
    if buf.size:
        buf[1:] = buf[:-1].copy()
        buf[0] = value


def _c_stable(c_tail: np.ndarray) -> bool:
    if c_tail.size == 1:
        return abs(c_tail[0]) < 1.0 - C_STABILITY_TOL
    return is_stable(Polynomial.monic(c_tail), C_STABILITY_TOL)


class DesignerInfo:
    """Inverse information matrix ``R_t = (rho^-1 I + sum psi psi^T)^-1``.

    Kept without forgetting, independent of the estimator gain.
    """

    def __init__(self, dim: int, rho: float = 1e6):
        self.R = rho * np.eye(dim)

    @property
    def R11(self) -> float:
        return float(self.R[0, 0])

    @property
    def R12(self) -> np.ndarray:
        return self.R[0, 1:]

    @property
    def R22(self) -> np.ndarray:
        return self.R[1:, 1:]

    def update(self, psi: Sequence[float]) -> DesignerInfo:
        """Rank-one (Sherman-Morrison) update for a new gradient."""
        self.R = update_R(self.R, psi)
        return self

    def to_dict(self) -> dict:
        return {"R": self.R.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> DesignerInfo:
        R = np.array(data["R"], dtype=float)
        info = cls(R.shape[0])
        info.R = R
        return info


def update_R(R: np.ndarray, psi: Sequence[float]) -> np.ndarray:
    """``R - R psi psi^T R / (1 + psi^T R psi)``, symmetrized."""
    psi = np.asarray(psi, dtype=float)
    r_psi = R @ psi
    denom = 1.0 + psi @ r_psi
    assert denom > 0.0, "R lost positive definiteness"
    out = R - np.outer(r_psi, r_psi) / denom
    return 0.5 * (out + out.T)


def dumps_state(est: Rpem, info: DesignerInfo | None = None) -> str:
    """Text snapshot; floats survive a round trip exactly."""
    payload = {"version": SNAPSHOT_VERSION, "rpem": est.to_dict()}
    if info is not None:
        payload["designer_info"] = info.to_dict()
    return json.dumps(payload)


def loads_state(text: str) -> tuple[Rpem, DesignerInfo | None]:
    payload = json.loads(text)
    if payload.get("version") != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {payload.get('version')!r}")
    info = payload.get("designer_info")
    return Rpem.from_dict(payload["rpem"]), (
        DesignerInfo.from_dict(info) if info is not None else None
    )
