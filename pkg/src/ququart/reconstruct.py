"""Pure-state estimation from coincidence records.

Two stages:

* linear inversion of the moment design matrix, followed by projection onto
  the nearest density matrix (eigenvalue clipping, trace one);
* Poisson maximum likelihood over the four complex amplitudes, started
  from the principal eigenvector of that matrix plus random restarts.

The overall brightness is profiled out: for a fixed state the best scale
is ``N / sum(p)``, which leaves an objective in the amplitudes alone.
"""

from __future__ import annotations

import json
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .core import CoherenceMatrix4, QuquartState, fidelity
from .errors import DegenerateDataError, ProtocolError
from .tomography import RecordSet, moment_design_matrix, protocol1_settings

GRAD_TOL = 1e-8
MAX_ITER = 500
DEFAULT_STARTS = 8
_P_FLOOR = 1e-300


@dataclass
class ReconstructionResult:
    estimate: QuquartState
    scale: float
    log_likelihood: float
    residual: float
    iterations: int
    converged: bool
    fidelity: float | None = None
    start_index: int = 0
    method: str = "ml"

    def to_dict(self) -> dict:
        d = {
            "estimate": self.estimate.to_reals(),
            "scale": self.scale,
            "log_likelihood": self.log_likelihood,
            "residual": self.residual,
            "iterations": self.iterations,
            "converged": self.converged,
            "start_index": self.start_index,
            "method": self.method,
        }
        if self.fidelity is not None:
            d["fidelity"] = self.fidelity
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


# Linear inversion ----------------------------------------------------------

def project_density(matrix: np.ndarray) -> np.ndarray:
    """Nearest PSD matrix by eigenvalue clipping, rescaled to unit trace."""
    h = 0.5 * (matrix + matrix.conj().T)
    w, u = np.linalg.eigh(h)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        raise DegenerateDataError("linear inversion gave no positive weight")
    w = w / w.sum()
    return (u * w) @ u.conj().T


def linear_invert(records: RecordSet) -> CoherenceMatrix4:
    """Least-squares moment inversion for any record set of full rank."""
    n = records.counts / records.exposures
    if not np.any(n > 0):
        raise DegenerateDataError("all counts are zero")
    w = moment_design_matrix(records.settings, records.lambdas_nm)
    sv = np.linalg.svd(w, compute_uv=False)
    if sv[-1] < 1e-10 * sv[0] or w.shape[0] < w.shape[1]:
        raise ProtocolError(
            f"settings do not determine all 16 moments (rank {np.sum(sv > 1e-10 * sv[0])} of 16)")
    moments, *_ = np.linalg.lstsq(w, n, rcond=None)
    raw = CoherenceMatrix4.from_moments(moments)
    return CoherenceMatrix4(project_density(raw.matrix))


def linear_invert_p1(records: RecordSet) -> CoherenceMatrix4:
    """Exact inversion of the sixteen canonical Protocol 1 records."""
    if records.protocol != "P1":
        raise ProtocolError("linear_invert_p1 needs Protocol 1 records")
    canon = {s.angles_deg() for s in protocol1_settings()}
    got = [s.angles_deg() for s in records.settings]
    if len(got) != 16 or set(got) != canon:
        raise ProtocolError(
            f"linear inversion needs the 16 canonical Protocol 1 settings, got {len(got)} records "
            f"covering {len(set(got) & canon)} of them")
    return linear_invert(records)


def principal_state(k: CoherenceMatrix4) -> QuquartState:
    w, u = np.linalg.eigh(0.5 * (k.matrix + k.matrix.conj().T))
    return QuquartState.from_unnormalized(u[:, -1])


# Maximum likelihood --------------------------------------------------------

class _Objective:
    """Profiled negative log-likelihood per count, as a function of 8 reals."""

    def __init__(self, vectors: np.ndarray, counts: np.ndarray):
        self.v = vectors
        self.n = counts
        self.total = float(counts.sum())
        self.active = counts > 0

    def __call__(self, x):
        c = x[0::2] + 1j * x[1::2]
        vc = self.v @ c
        p = np.abs(vc) ** 2
        s = p.sum()
        if s <= 0:
            return np.inf, np.zeros_like(x)
        pa = np.maximum(p[self.active], _P_FLOOR)
        na = self.n[self.active]
        f = -(np.dot(na, np.log(pa)) - self.total * np.log(s)) / self.total
        weights = np.zeros_like(p)
        weights[self.active] = na / pa
        gc = -(self.v.conj().T @ (weights * vc) - (self.total / s) * (self.v.conj().T @ vc)) / self.total
        g = np.empty_like(x)
        g[0::2] = 2 * gc.real
        g[1::2] = 2 * gc.imag
        return f, g


def _poisson_stats(vectors, counts, c):
    p = np.abs(vectors @ c) ** 2
    scale = counts.sum() / p.sum()
    mu = scale * p
    active = counts > 0
    ll = float(np.dot(counts[active], np.log(np.maximum(mu[active], _P_FLOOR))) - mu.sum())
    chi2 = float(np.sum((counts - mu) ** 2 / np.maximum(mu, 1.0)))
    dof = max(len(counts) - 8, 1)
    return float(scale), ll, chi2 / dof


def _normalize(x):
    return x / np.linalg.norm(x)


def _run_start(obj: _Objective, x0: np.ndarray, gtol: float, maxiter: int):
    x0 = _normalize(x0)
    f0, _ = obj(x0)
    res = minimize(obj, x0, jac=True, method="BFGS", options={"gtol": gtol, "maxiter": maxiter})
    x = _normalize(res.x)
    f, g = obj(x)
    if not f <= f0:  # never hand back something worse than where we started
        x, f, g = x0, f0, obj(x0)[1]
    converged = bool(np.linalg.norm(g) < gtol or res.success)
    return f, x, int(res.nit), converged


def ml_refine(records: RecordSet, initial: QuquartState | None = None, starts: int = DEFAULT_STARTS,
              seed: int = 0, gtol: float = GRAD_TOL, maxiter: int = MAX_ITER,
              workers: int | None = None) -> ReconstructionResult:
    """Poisson ML over the amplitudes, from ``initial`` plus ``starts`` random points.

    Start 0 is ``initial`` (when given); random start ``k`` is seeded by
    ``(seed, k)``. The best objective wins, ties going to the lowest index.
    """
    counts = records.counts
    if len(records) < 8:
        raise ProtocolError(f"maximum likelihood needs at least 8 records, got {len(records)}")
    if not np.any(counts > 0):
        raise DegenerateDataError("all counts are zero")
    vectors = records.vectors()
    obj = _Objective(vectors, counts)

    points = []
    if initial is not None:
        points.append(np.asarray(initial.to_reals()))
    for k in range(starts):
        points.append(np.random.default_rng([seed, k]).normal(size=8))

    def work(x0):
        return _run_start(obj, x0, gtol, maxiter)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(work, points))
    else:
        outcomes = [work(x0) for x0 in points]

    best = min(range(len(outcomes)), key=lambda i: (outcomes[i][0], i))
    f, x, nit, converged = outcomes[best]
    est = QuquartState.from_reals(x).canonical()
    scale, ll, resid = _poisson_stats(vectors, counts, est.c)
    return ReconstructionResult(est, scale, ll, resid, nit, converged, start_index=best)


def reconstruct(records: RecordSet, reference: QuquartState | None = None, starts: int = DEFAULT_STARTS,
                seed: int = 0, gtol: float = GRAD_TOL, maxiter: int = MAX_ITER,
                workers: int | None = None) -> ReconstructionResult:
    """Linear-inversion warm start (when the settings allow it) then ML."""
    initial = None
    method = "linear+ml"
    try:
        if records.protocol == "P1":
            initial = principal_state(linear_invert_p1(records))
        else:
            initial = principal_state(linear_invert(records))
    except ProtocolError as exc:
        if len(records) < 8:
            raise ProtocolError(f"{exc}; fewer than 8 records, cannot fall back to maximum likelihood") from None
        warnings.warn(f"{exc}; using maximum likelihood from random starts only", stacklevel=2)
        method = "ml"
    res = ml_refine(records, initial, starts=starts, seed=seed, gtol=gtol, maxiter=maxiter, workers=workers)
    res.method = method
    if reference is not None:
        res.fidelity = fidelity(res.estimate, reference)
    return res
