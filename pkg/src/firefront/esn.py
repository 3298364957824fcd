"""One echo state network member of the hybrid level-set model.

The reservoir learns the normal spread speed. Inputs are embeddings
``x_t = [phi_t, phi_{t-1}]``; the readout maps hidden states to the speed
field and is fitted by ridge regression. A member forecast is
``phi_{T+1} = phi_T - W_out h_T dt``.

Time alignment for observations ``phi_1 .. phi_T``:

* ``h_1 = U x_2`` (initial state, not used for training);
* ``h_k = (1 - a) h_{k-1} + a tanh(W h_{k-1} + U x_k)`` for ``k = 2 .. T``;
* targets ``v_k = (phi_k - phi_{k+1}) / dt`` for ``k = 1 .. T-1``;
* training pairs ``(h_k, v_k)`` for ``k = 2 .. T-1``, i.e. ``T - 2`` pairs,
  each state seeing only data up to ``phi_k``;
* ``h_T`` drives the forecast.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy import linalg

from .grid import ScalarField, require_same_grid

MAX_RESAMPLES = 10


class DegenerateReservoirError(RuntimeError):
    pass


@dataclass(frozen=True)
class HyperParams:
    a_w: float
    a_u: float
    pi_w: float
    pi_u: float
    J: int
    nu: float
    alpha_leak: float
    tau_ridge: float
    dt: float = 0.1

    def __post_init__(self):
        if not (self.a_w > 0 and self.a_u > 0):
            raise ValueError("a_w and a_u must be positive")
        if not (0 <= self.pi_w <= 1 and 0 <= self.pi_u <= 1):
            raise ValueError("pi_w and pi_u must be probabilities")
        if int(self.J) != self.J or self.J < 1:
            raise ValueError(f"J must be a positive integer, got {self.J}")
        if not 0 < self.nu < 1:
            raise ValueError(f"nu must lie in (0, 1), got {self.nu}")
        if not 0 < self.alpha_leak <= 1:
            raise ValueError(f"alpha_leak must lie in (0, 1], got {self.alpha_leak}")
        if not (self.tau_ridge > 0 and self.dt > 0):
            raise ValueError("tau_ridge and dt must be positive")
        object.__setattr__(self, "J", int(self.J))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Reservoir:
    hp: HyperParams
    W_in: np.ndarray  # already scaled to spectral radius nu
    U: np.ndarray
    lambda_w: float  # spectral radius before scaling
    seed: int
    n_u: int

    def dumps(self) -> str:
        """Enough to rebuild bit-identical matrices with :func:`sample_reservoir`."""
        return json.dumps({"hp": self.hp.to_dict(), "seed": self.seed, "n_u": self.n_u}, sort_keys=True)

    @classmethod
    def loads(cls, text: str) -> "Reservoir":
        d = json.loads(text)
        return sample_reservoir(HyperParams(**d["hp"]), d["n_u"], d["seed"])


@dataclass(frozen=True, eq=False)
class ReadOut:
    W_out: np.ndarray


def spectral_radius(M) -> float:
    """Largest eigenvalue modulus, over the complex spectrum."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"spectral radius needs a square matrix, got shape {M.shape}")
    if M.shape[0] == 0 or not np.any(M):
        return 0.0
    if M.shape[0] <= 200:
        return float(np.max(np.abs(np.linalg.eigvals(M))))
    from scipy.sparse.linalg import eigs
    vals = eigs(M, k=1, which="LM", return_eigenvectors=False, tol=1e-12)
    return float(np.abs(vals[0]))


def _sparse_uniform(rng: np.random.Generator, shape, density: float, scale: float) -> np.ndarray:
    keep = rng.random(shape) < density
    return np.where(keep, rng.uniform(-scale, scale, shape), 0.0)


def sample_reservoir(hp: HyperParams, n_u: int, seed: int) -> Reservoir:
    """Draw sparse uniform recurrent and input weights, then rescale the recurrent ones.

    An all-zero recurrent draw has no spectral radius to divide by; it is
    redrawn from the next sub-seed, at most ``MAX_RESAMPLES`` times.
    """
    if n_u < 1:
        raise ValueError("n_u must be positive")
    seed = int(seed)
    for attempt in range(MAX_RESAMPLES + 1):
        rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(1, attempt)))
        W = _sparse_uniform(rng, (hp.J, hp.J), hp.pi_w, hp.a_w)
        U = _sparse_uniform(rng, (hp.J, n_u), hp.pi_u, hp.a_u)
        lam = spectral_radius(W)
        if lam > 0:
            return Reservoir(hp, W * (hp.nu / lam), U, lam, seed, n_u)
    raise DegenerateReservoirError(
        f"degenerate reservoir: spectral radius 0 after {MAX_RESAMPLES} resamples (seed {seed})")


def build_embedding(phi_t: ScalarField, phi_prev: ScalarField) -> np.ndarray:
    require_same_grid(phi_t, phi_prev)
    return np.concatenate([phi_t.values, phi_prev.values])


def init_hidden(res: Reservoir, x_second: np.ndarray) -> np.ndarray:
    x = np.asarray(x_second, dtype=float)
    if x.shape != (res.n_u,):
        raise ValueError(f"input has shape {x.shape}, reservoir expects ({res.n_u},)")
    return res.U @ x


def update_hidden(res: Reservoir, h_prev: np.ndarray, x: np.ndarray) -> np.ndarray:
    h_prev = np.asarray(h_prev, dtype=float)
    x = np.asarray(x, dtype=float)
    if h_prev.shape != (res.hp.J,) or x.shape != (res.n_u,):
        raise ValueError("hidden state or input has the wrong length")
    return _leaky(res, h_prev, res.U @ x)


def _leaky(res: Reservoir, h_prev: np.ndarray, drive: np.ndarray) -> np.ndarray:
    a = res.hp.alpha_leak
    cand = np.tanh(res.W_in @ h_prev + drive)
    if a == 1.0:
        return cand
    return (1.0 - a) * h_prev + a * cand


def hidden_states(res: Reservoir, phis: Sequence[ScalarField]) -> np.ndarray:
    """States ``h_1 .. h_T`` as columns of a ``J x T`` matrix."""
    if len(phis) < 2:
        raise ValueError("need at least 2 observations to build an embedding")
    require_same_grid(*phis)
    P = np.column_stack([p.values for p in phis])  # N x T
    X = np.vstack([P[:, 1:], P[:, :-1]])  # columns x_2 .. x_T
    if X.shape[0] != res.n_u:
        raise ValueError(f"embedding length {X.shape[0]} does not match reservoir n_u {res.n_u}")
    drive = res.U @ X  # column k-2 drives h_k
    T = len(phis)
    H = np.empty((res.hp.J, T))
    H[:, 0] = drive[:, 0]
    for k in range(1, T):
        H[:, k] = _leaky(res, H[:, k - 1], drive[:, k - 1])
    return H


def velocity_targets(phis: Sequence[ScalarField], dt: float) -> list[np.ndarray]:
    if len(phis) < 2:
        raise ValueError("need at least 2 observations for velocity targets")
    if not dt > 0:
        raise ValueError("dt must be positive")
    require_same_grid(*phis)
    return [(a.values - b.values) / dt for a, b in zip(phis[:-1], phis[1:])]


def fit_readout(H: np.ndarray, V: np.ndarray, tau_ridge: float) -> ReadOut:
    """Closed-form ridge readout ``W = V H^T (H H^T + tau I)^-1``.

    Minimises ``sum_t |v_t - W h_t|^2 + tau |W|_F^2`` through a Cholesky solve.
    """
    H = np.asarray(H, dtype=float)
    V = np.asarray(V, dtype=float)
    if H.ndim != 2 or V.ndim != 2 or H.shape[1] != V.shape[1]:
        raise ValueError(f"H {H.shape} and V {V.shape} must have matching column counts")
    if not tau_ridge > 0:
        raise ValueError("tau_ridge must be positive")
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(V))):
        raise ValueError("readout inputs contain non-finite values")
    A = H @ H.T
    A[np.diag_indices_from(A)] += tau_ridge
    W = linalg.cho_solve(linalg.cho_factor(A, lower=True), H @ V.T).T
    return ReadOut(W)


def ridge_objective(W: np.ndarray, H: np.ndarray, V: np.ndarray, tau_ridge: float) -> float:
    R = V - W @ H
    return float(np.sum(R * R) + tau_ridge * np.sum(W * W))


@dataclass(frozen=True, eq=False)
class MemberFit:
    readout: ReadOut
    H: np.ndarray  # h_1 .. h_T
    V: np.ndarray  # training targets, N x (T-2)
    forecast: ScalarField


def fit_member(res: Reservoir, phis: Sequence[ScalarField]) -> MemberFit:
    T = len(phis)
    if T < 3:
        raise ValueError(f"member forecast needs at least 3 observations, got {T}")
    dt = res.hp.dt
    H = hidden_states(res, phis)
    targets = velocity_targets(phis, dt)
    V = np.column_stack(targets[1:])  # v_2 .. v_{T-1}
    readout = fit_readout(H[:, 1:T - 1], V, res.hp.tau_ridge)
    v_next = readout.W_out @ H[:, T - 1]
    forecast = ScalarField(phis[-1].grid, phis[-1].values - v_next * dt)
    return MemberFit(readout, H, V, forecast)


def member_forecast(res: Reservoir, phis: Sequence[ScalarField]) -> ScalarField:
    """One-step-ahead forecast of the field after ``phis[-1]``."""
    return fit_member(res, phis).forecast


def n_training_pairs(n_obs: int) -> int:
    return max(n_obs - 2, 0)

