"""Path simulation of the diagonal jump system and Monte Carlo functionals.

The update rule holds coefficients at the left endpoint and draws driver
increments exact in law:

    X_{k+1} = X_k + diag(A(X_k)) dZ_k.

The dyadic freezing scheme re-runs the same recorded increments with
coefficients read from the reference path at dyadic times, which mirrors the
truncated-coefficient construction and couples the two paths pathwise.

State coordinates beyond the escape threshold mark a path escaped: it stops
evolving, still counts for exceedance probabilities, and is excluded from
resolvent quadrature with the exclusion rate reported.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .driver import AlphaSpec
from .fields import DiagonalCoefficientField
from .rng import RngHandle
from .stable import sample_increments

ESCAPE_THRESHOLD = 1e12
ENSEMBLE_GUARD_ELEMENTS = 200_000_000


@dataclass(frozen=True)
class SamplePath:
    """One trajectory, piecewise constant between grid times."""

    times: np.ndarray
    states: np.ndarray                  # (n_steps + 1, d)
    driver_increments: np.ndarray | None
    scheme_tag: str
    escaped: bool = False

    def __post_init__(self):
        if len(self.times) != len(self.states):
            raise ValueError("times and states must align")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")

    @property
    def d(self) -> int:
        return self.states.shape[1]

    def to_csv(self, path) -> None:
        d = self.d
        header = "t," + ",".join(f"x_{j + 1}" for j in range(d))
        with open(path, "w") as fh:
            fh.write(header + "\n")
            for t, row in zip(self.times, self.states):
                fh.write(("%.17g" % t) + ","
                         + ",".join("%.17g" % v for v in row) + "\n")


@dataclass
class PathEnsemble:
    """Vectorized ensemble sharing a time grid; per-path streams."""

    times: np.ndarray
    states: np.ndarray                  # (npaths, n_steps + 1, d)
    increments: np.ndarray | None       # (npaths, n_steps, d) when recorded
    rng: RngHandle
    scheme_tag: str
    field_description: str
    escaped: np.ndarray = field(default=None)

    @property
    def npaths(self) -> int:
        return self.states.shape[0]

    @property
    def d(self) -> int:
        return self.states.shape[2]

    def path(self, i: int) -> SamplePath:
        return SamplePath(
            times=self.times,
            states=self.states[i],
            driver_increments=None if self.increments is None else self.increments[i],
            scheme_tag=self.scheme_tag,
            escaped=bool(self.escaped[i]),
        )


def _steps_for(T: float, dt: float) -> int:
    n = int(round(T / dt))
    if n < 1 or abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError(f"T = {T} must be an integer multiple of dt = {dt}")
    return n


def _draw_increments(spec: AlphaSpec, dt: float, n_steps: int, npaths: int,
                     rng: RngHandle) -> np.ndarray:
    """(npaths, n_steps, d) driver increments; path i owns stream i.

    Per path, coordinates are drawn axis by axis for the whole horizon, so a
    path's noise is a pure function of (seed, stream_id + i).
    """
    out = np.empty((npaths, n_steps, spec.d))
    for i in range(npaths):
        gen = rng.substream(i).generator()
        for j, idx in enumerate(spec.alphas):
            out[i, :, j] = sample_increments(idx, dt, n_steps, gen)
    return out


def simulate_ensemble(field: DiagonalCoefficientField, spec: AlphaSpec, x0,
                      T: float, dt: float, npaths: int, rng: RngHandle,
                      record_increments: bool = True) -> PathEnsemble:
    """Left-endpoint Euler ensemble with exact-in-law driver increments."""
    x0 = np.asarray(x0, dtype=float)
    d = spec.d
    n_steps = _steps_for(T, dt)
    if npaths * (n_steps + 1) * d > ENSEMBLE_GUARD_ELEMENTS:
        raise MemoryError("ensemble exceeds the desk-scale guard; "
                          "reduce npaths or the number of steps")
    dz = _draw_increments(spec, dt, n_steps, npaths, rng)
    states = np.empty((npaths, n_steps + 1, d))
    states[:, 0, :] = x0
    escaped = np.zeros(npaths, dtype=bool)
    x = np.tile(x0, (npaths, 1))
    for k in range(n_steps):
        coeffs = field(x)
        live = ~escaped
        x[live] = x[live] + coeffs[live] * dz[live, k, :]
        newly = np.abs(x).max(axis=1) > ESCAPE_THRESHOLD
        escaped |= newly
        states[:, k + 1, :] = x
    field.check_bounds(states[~escaped].reshape(-1, d)[:10_000])
    return PathEnsemble(
        times=np.arange(n_steps + 1) * dt,
        states=states,
        increments=dz if record_increments else None,
        rng=rng,
        scheme_tag="euler",
        field_description=field.description,
        escaped=escaped,
    )


def simulate_euler(field: DiagonalCoefficientField, spec: AlphaSpec, x0,
                   T: float, dt: float, rng: RngHandle) -> SamplePath:
    """Single Euler path; increments recorded for coupling."""
    ens = simulate_ensemble(field, spec, x0, T, dt, 1, rng)
    return ens.path(0)


def simulate_dyadic_freezing(field: DiagonalCoefficientField,
                             reference: PathEnsemble, n: int) -> PathEnsemble:
    """Coupled approximation with coefficients frozen at dyadic times k/2^n.

    Consumes the reference ensemble's recorded increments on its finer grid
    (step 2^-m, m >= n) and reads coefficients from the reference states at
    the last dyadic time.  The freeze-after-horizon clause never activates
    for T <= n (enforced); the returned ensemble is pathwise coupled to the
    reference.
    """
    if reference.increments is None:
        raise ValueError("reference ensemble must record driver increments")
    dt = float(reference.times[1] - reference.times[0])
    m_exact = -np.log2(dt)
    if abs(m_exact - round(m_exact)) > 1e-9:
        raise ValueError("reference grid must be dyadic, dt = 2^-m")
    m = int(round(m_exact))
    if n > m:
        raise ValueError(f"driver grid 2^-{m} is coarser than the freezing "
                         f"grid 2^-{n}")
    T = float(reference.times[-1])
    if T > n:
        raise ValueError(f"horizon T = {T} exceeds the freezing level n = {n}; "
                         "the freeze-after-n clause would activate")
    stride = 2 ** (m - n)
    npaths, n_steps_p1, d = reference.states.shape
    n_steps = n_steps_p1 - 1
    states = np.empty_like(reference.states)
    states[:, 0, :] = reference.states[:, 0, :]
    x = reference.states[:, 0, :].copy()
    escaped = np.zeros(npaths, dtype=bool)
    for k in range(n_steps):
        anchor = (k // stride) * stride
        coeffs = field(reference.states[:, anchor, :])
        live = ~escaped
        x[live] = x[live] + coeffs[live] * reference.increments[live, k, :]
        escaped |= np.abs(x).max(axis=1) > ESCAPE_THRESHOLD
        states[:, k + 1, :] = x
    return PathEnsemble(
        times=reference.times.copy(),
        states=states,
        increments=None,
        rng=reference.rng,
        scheme_tag=f"dyadic_{n}",
        field_description=field.description,
        escaped=escaped | reference.escaped,
    )


def coupling_discrepancy(reference: PathEnsemble, frozen: PathEnsemble) -> np.ndarray:
    """Per-path sup over grid times of |U^n - X|."""
    diff = np.linalg.norm(frozen.states - reference.states, axis=2)
    return diff.max(axis=1)


@dataclass(frozen=True)
class ResolventEstimate:
    estimate: float
    stderr: float
    tail_bound: float
    excluded_fraction: float

    def to_dict(self) -> dict:
        return {"estimate": self.estimate, "stderr": self.stderr,
                "tail_bound": self.tail_bound,
                "excluded_fraction": self.excluded_fraction}


def resolvent_mc(ensemble: PathEnsemble, f, lam: float,
                 sup_norm: float | None = None) -> ResolventEstimate:
    """Monte Carlo resolvent functional E int_0^inf e^{-lam t} f(X_t) dt.

    The path is piecewise constant between grid times, so the time integral
    of e^{-lam t} f(path) up to the horizon is exact per segment; the tail
    beyond the horizon is bounded by e^{-lam T} sup|f| / lam and reported.
    Escaped paths are excluded with the exclusion rate reported.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    t = ensemble.times
    seg = (np.exp(-lam * t[:-1]) - np.exp(-lam * t[1:])) / lam
    keep = ~ensemble.escaped
    if not keep.any():
        raise ValueError("all paths escaped; nothing to integrate")
    npaths, n_steps_p1, d = ensemble.states.shape
    vals = np.asarray(f(ensemble.states[keep][:, :-1, :].reshape(-1, d)))
    vals = vals.reshape(keep.sum(), n_steps_p1 - 1)
    per_path = vals @ seg
    est = float(per_path.mean())
    stderr = float(per_path.std(ddof=1) / np.sqrt(len(per_path))) \
        if len(per_path) > 1 else np.inf
    sup = sup_norm if sup_norm is not None else float(np.abs(vals).max())
    tail = np.exp(-lam * t[-1]) * sup / lam
    return ResolventEstimate(
        estimate=est, stderr=stderr, tail_bound=tail,
        excluded_fraction=float(ensemble.escaped.mean()),
    )


@dataclass(frozen=True)
class ExceedanceTable:
    deltas: np.ndarray
    probabilities: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray

    def to_rows(self) -> list[dict]:
        return [{"delta": d, "p": p, "lo": lo, "hi": hi}
                for d, p, lo, hi in zip(self.deltas, self.probabilities,
                                        self.ci_low, self.ci_high)]


def _wilson(successes: np.ndarray, n: int, z: float = 1.959963984540054):
    p = successes / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2 * n)) / denom
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return np.clip(center - half, 0, 1), np.clip(center + half, 0, 1)


def maximal_inequality_probe(ensemble: PathEnsemble, t: float,
                             deltas) -> ExceedanceTable:
    """Empirical P(sup_{s <= t} |X_s - X_0| > delta) with Wilson intervals."""
    deltas = np.asarray(deltas, dtype=float)
    mask = ensemble.times <= t + 1e-12
    if not mask.any() or ensemble.times[mask][-1] < t - 1e-9:
        raise ValueError("ensemble horizon is shorter than t")
    disp = np.linalg.norm(
        ensemble.states[:, mask, :] - ensemble.states[:, :1, :], axis=2)
    running_sup = disp.max(axis=1)
    n = ensemble.npaths
    exceed = np.array([(running_sup > d).sum() for d in deltas])
    lo, hi = _wilson(exceed.astype(float), n)
    return ExceedanceTable(deltas=deltas, probabilities=exceed / n,
                           ci_low=lo, ci_high=hi)
