"""Decay fitting, uncertainty estimation, and error-rate decomposition.

The pipeline is: average a dataset per length, fit the exponential decay
A + B p^m with weighted least squares, convert p to an error rate, and
bootstrap over circuits for 2 sigma intervals.  Mixed-sampler experiments
are decomposed through a linear rate system.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares, minimize_scalar

from .clifford import GateLabel
from .device import DeviceSpec
from .sampling import SamplerSpec, cnot_placement_distribution
from .simulate import Dataset, ErrorModel, layer_error_rate


def drb_error_rate(p: float, n: int) -> float:
    """Error rate implied by a fitted decay constant on n qubits."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p must lie in [0, 1], got {p}")
    d = 4.0**n
    return (d - 1.0) * (1.0 - p) / d


@dataclass(frozen=True)
class DecayFit:
    """Result of fitting P_m = A + B p^m."""

    A: float
    B: float
    p: float
    n: int
    r: float
    lengths: tuple[int, ...]
    residuals: tuple[float, ...]
    clamped: bool = False
    degenerate: bool = False
    anchored: bool = False
    p_interval: tuple[float, float] | None = None
    r_interval: tuple[float, float] | None = None

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError("p must lie in [0, 1]")
        if abs(self.r - drb_error_rate(self.p, self.n)) > 1e-12:
            raise ValueError("r inconsistent with p")


@dataclass(frozen=True)
class RateSystem:
    """Linear system r = M eps linking observed rates to layer categories.

    ``matrix`` rows are experiments, columns are gate categories; each row
    must sum to 1 because every sampled layer falls in exactly one
    category.  ``solve_category_rates`` fills the epsilon fields.
    """

    matrix: tuple[tuple[float, ...], ...]
    observed: tuple[float, ...]
    sigmas: tuple[float, ...] | None = None
    epsilons: tuple[float, ...] | None = None
    epsilon_sigmas: tuple[float, ...] | None = None
    epsilon_covariance: tuple[tuple[float, ...], ...] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.size == 0:
            raise ValueError("matrix must be a nonempty 2d array")
        if len(self.observed) != m.shape[0]:
            raise ValueError("one observed rate per matrix row required")
        if self.sigmas is not None and len(self.sigmas) != m.shape[0]:
            raise ValueError("one sigma per matrix row required")
        bad = np.abs(m.sum(axis=1) - 1.0) > 1e-9
        if np.any(bad):
            raise ValueError(f"matrix rows must sum to 1 (rows {np.flatnonzero(bad).tolist()})")


@dataclass(frozen=True)
class BootstrapResult:
    fit: DecayFit
    p_sigma: float
    r_sigma: float
    a_sigma: float
    b_sigma: float
    p_interval: tuple[float, float]
    r_interval: tuple[float, float]
    a_interval: tuple[float, float]
    b_interval: tuple[float, float]
    resamples: int
    failures: int


@dataclass(frozen=True)
class BuildingBlockRates:
    local: float
    cnot_classes: tuple[float, ...]
    cnot: float
    flagged: bool
    local_sigma: float | None = None
    class_sigmas: tuple[float, ...] | None = None
    cnot_sigma: float | None = None


def average_success(dataset: Dataset) -> dict[int, tuple[float, tuple[float, ...]]]:
    """Per-length mean success rate plus the per-circuit rates behind it."""
    if not dataset.rows:
        raise ValueError("dataset has no rows")
    per: dict[int, list[float]] = {}
    for row in dataset.rows:
        if row.shots == 0:
            raise ValueError(f"row {row.circuit_id} has zero shots")
        per.setdefault(row.m, []).append(row.successes / row.shots)
    return {m: (float(np.mean(v)), tuple(v)) for m, v in sorted(per.items())}


def binomial_weights(points: dict[int, float], shots_by_length: dict[int, int]) -> dict[int, float]:
    """Inverse binomial-variance weights, floored so P_m in {0, 1} cannot
    produce an infinite weight."""
    out = {}
    for m, p in points.items():
        s = shots_by_length[m]
        if s <= 0:
            raise ValueError(f"no shots recorded at length {m}")
        var = max(p * (1.0 - p), 0.25 / s) / s
        out[m] = 1.0 / var
    return out


def _anchored_fit(ms: np.ndarray, ys: np.ndarray, sw: np.ndarray,
                  a0: float) -> tuple[float, float, float, bool]:
    """Best fit of a0 + B p^m with the asymptote held at a0.

    B is linear given p, so it is profiled out and p searched directly
    over [0, 1]: a coarse grid to bracket the minimum, then a bounded
    polish.  Returns (sse, B, p, clamped) with sse in weighted units;
    clamped means the optimum sat on the p = 0 or p = 1 boundary.
    """
    ex = sw * (ys - a0)

    def at(p: float) -> tuple[float, float]:
        x = sw * np.power(p, ms)
        xx = float(x @ x)
        b = float(x @ ex) / xx if xx > 0.0 else 0.0
        res = b * x - ex
        return float(res @ res), b

    grid = np.linspace(0.0, 1.0, 201)
    sses = [at(p)[0] for p in grid]
    i = int(np.argmin(sses))
    lo = float(grid[max(i - 1, 0)])
    hi = float(grid[min(i + 1, len(grid) - 1)])
    polish = minimize_scalar(lambda q: at(q)[0], bounds=(lo, hi),
                             method="bounded", options={"xatol": 1e-13})
    sse, p = min((float(sses[i]), float(grid[i])), (float(polish.fun), float(polish.x)))
    clamped = False
    # the bounded polish never lands exactly on a boundary; snap to it when
    # the boundary is at least as good, so growing data reports p = 1 exactly
    for edge in (0.0, 1.0):
        if abs(p - edge) < 1e-7:
            s_edge = at(edge)[0]
            if s_edge <= sse + 1e-12 * max(s_edge, 1.0):
                sse, p, clamped = s_edge, edge, True
    return sse, at(p)[1], p, clamped


def fit_decay(points: dict[int, float], weights: dict[int, float] | None = None,
              n: int | None = None) -> DecayFit:
    """Weighted least-squares fit of P_m = A + B p^m.

    Two candidate fits are compared.  The anchored fit holds A at the
    uniform-outcome floor 2^-n; the full fit lets (A, B, p) float, seeded
    from the anchored solution and from a log-linear regression.  The
    full fit is kept only when its improvement passes an F-style gate
    against its own residual noise: slow decays leave A and p jointly
    unidentifiable, and on such data an unanchored optimum wanders the
    (A, p) ridge, scattering r by far more than the statistical error of
    the anchored estimate.  Exact data keep machine-level recovery
    because there the full fit drives the residual to zero while a wrong
    anchor cannot.  p is clamped into [0, 1] after selection and the
    clamp is recorded.
    """
    if n is None:
        raise ValueError("qubit count n is required")
    lengths = tuple(sorted(int(m) for m in points))
    if len(lengths) < 3:
        raise ValueError("need at least 3 distinct lengths to fit 3 parameters")
    ms = np.array(lengths, dtype=int)
    ys = np.array([points[m] for m in lengths], dtype=float)
    if weights is None:
        w = np.ones_like(ys)
    else:
        w = np.array([weights[m] for m in lengths], dtype=float)
        if np.any(w <= 0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be positive and finite")
    sw = np.sqrt(w)
    a0 = 2.0**-n

    if float(np.ptp(ys)) < 1e-14:
        # constant data cannot identify p; report the p = 1 limit, flagged
        return DecayFit(A=a0, B=float(ys[0]) - a0, p=1.0, n=n, r=0.0,
                        lengths=lengths, residuals=(0.0,) * len(lengths),
                        degenerate=True)

    sse_anch, b_anch, p_anch, cl_anch = _anchored_fit(ms, ys, sw, a0)

    b0 = float(ys[0]) - a0
    excess = ys - a0
    mask = excess > 1e-9
    if int(mask.sum()) >= 2:
        # growth seeds above 1 are allowed; the fit clamps afterwards
        slope = np.polyfit(ms[mask], np.log(excess[mask]), 1)[0]
        p0 = float(np.clip(np.exp(slope), 1e-6, 10.0))
    else:
        p0 = 0.9

    def resid(x):
        a, b, p = x
        return sw * (a + b * np.power(p, ms) - ys)

    def jac(x):
        _, b, p = x
        cols = np.empty((len(ms), 3))
        cols[:, 0] = sw
        cols[:, 1] = sw * np.power(p, ms)
        cols[:, 2] = sw * b * ms * np.power(p, np.maximum(ms - 1, 0))
        return cols

    best = None
    for x0 in ((a0, b0, p0), (a0, b_anch, p_anch)):
        sol = least_squares(resid, x0=x0, jac=jac, method="lm",
                            xtol=1e-14, ftol=1e-14, gtol=1e-14)
        if best is None or sol.cost < best.cost:
            best = sol
    # selection happens before the clamp: the clamp can only raise the
    # full fit's residual, and data driven outside p in [0, 1] should
    # still report the clamped full fit, not the anchored one
    sse_free = 2.0 * float(best.cost)
    dof = len(lengths) - 3
    # the gate is scale invariant in the weights; 12 sits near the 1%
    # point of F(1, 8), so anchor-consistent noise rarely releases A
    if not math.isfinite(sse_free):
        anchored = True
    elif sse_free == 0.0:
        anchored = sse_anch <= 0.0
    elif dof <= 0:
        anchored = sse_anch <= sse_free
    else:
        anchored = (sse_anch - sse_free) * dof / sse_free <= 12.0
    if anchored:
        a, b, p, clamped = a0, b_anch, p_anch, cl_anch
    else:
        a, b, p = (float(v) for v in best.x)
        clamped = False
        if not 0.0 <= p <= 1.0:
            clamped = True
            p = min(max(p, 0.0), 1.0)
            # with p pinned the model is linear in (A, B); refit them exactly
            design = np.stack([np.ones_like(ys), np.power(float(p), ms)], axis=1)
            coef = np.linalg.lstsq(design * sw[:, None], ys * sw, rcond=None)[0]
            a, b = float(coef[0]), float(coef[1])
    fitted = a + b * np.power(p, ms)
    return DecayFit(A=a, B=b, p=p, n=n, r=drb_error_rate(p, n), lengths=lengths,
                    residuals=tuple(float(v) for v in ys - fitted), clamped=clamped,
                    anchored=anchored)


def _clamp_interval(center: float, sigma: float, lo: float, hi: float) -> tuple[float, float]:
    return (max(center - 2.0 * sigma, lo), min(center + 2.0 * sigma, hi))


def bootstrap(dataset: Dataset, resamples: int = 1000,
              rng: np.random.Generator | None = None, n: int | None = None,
              threads: int = 1) -> BootstrapResult:
    """Circuit-level bootstrap intervals for the decay fit.

    Circuits are resampled with replacement within each length, the decay
    is refit per resample, and intervals are reported as the point
    estimate plus or minus twice the resample standard deviation.
    """
    if resamples < 100:
        raise ValueError("resamples must be at least 100")
    if rng is None:
        rng = np.random.default_rng(0)
    if not dataset.rows:
        raise ValueError("dataset has no rows")
    if n is None:
        n = len(dataset.rows[0].target)
    groups: dict[int, list[tuple[int, int]]] = {}
    for row in dataset.rows:
        if row.shots == 0:
            raise ValueError(f"row {row.circuit_id} has zero shots")
        groups.setdefault(row.m, []).append((row.successes, row.shots))
    lengths = sorted(groups)

    def summarize(chosen: dict[int, list[tuple[int, int]]]):
        points, shots = {}, {}
        for m in lengths:
            rows = chosen[m]
            points[m] = float(np.mean([s / t for s, t in rows]))
            shots[m] = sum(t for _, t in rows)
        return fit_decay(points, binomial_weights(points, shots), n=n)

    point = summarize(groups)

    seeds = rng.spawn(resamples)

    def one(child: np.random.Generator):
        chosen = {}
        for m in lengths:
            rows = groups[m]
            idx = child.integers(0, len(rows), size=len(rows))
            chosen[m] = [rows[i] for i in idx]
        fit = summarize(chosen)
        return fit.p, fit.r, fit.A, fit.B

    results = []
    failures = 0
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(one, child) for child in seeds]
            for fut in futures:
                try:
                    results.append(fut.result())
                except (ValueError, np.linalg.LinAlgError):
                    failures += 1
    else:
        for child in seeds:
            try:
                results.append(one(child))
            except (ValueError, np.linalg.LinAlgError):
                failures += 1
    if not results:
        raise RuntimeError("every bootstrap resample failed to fit")
    arr = np.array(results)
    p_sigma, r_sigma, a_sigma, b_sigma = (float(v) for v in arr.std(axis=0, ddof=1))
    p_iv = _clamp_interval(point.p, p_sigma, 0.0, 1.0)
    r_iv = _clamp_interval(point.r, r_sigma, 0.0, 1.0)
    a_iv = (point.A - 2.0 * a_sigma, point.A + 2.0 * a_sigma)
    b_iv = (point.B - 2.0 * b_sigma, point.B + 2.0 * b_sigma)
    fit = dataclasses.replace(point, p_interval=p_iv, r_interval=r_iv)
    return BootstrapResult(fit=fit, p_sigma=p_sigma, r_sigma=r_sigma, a_sigma=a_sigma,
                           b_sigma=b_sigma, p_interval=p_iv, r_interval=r_iv,
                           a_interval=a_iv, b_interval=b_iv,
                           resamples=resamples, failures=failures)


def predict_r_from_rates(spec: SamplerSpec, device: DeviceSpec, model: ErrorModel) -> float:
    """Sampler-weighted mean layer error rate, the calibration-based
    prediction for the fitted r."""
    if device.n != model.n:
        raise ValueError(f"device has {device.n} qubits but model has {model.n}")
    total = 0.0
    for placement, prob in cnot_placement_distribution(spec, device):
        covered = {q for pair in placement for q in pair}
        gates = [GateLabel("CNOT", pair) for pair in placement]
        gates.extend(GateLabel("I", (q,)) for q in range(device.n) if q not in covered)
        total += prob * layer_error_rate(model, gates)
    return total


def solve_category_rates(system: RateSystem) -> RateSystem:
    """Invert r = M eps and propagate observation variances linearly.

    Square systems are solved exactly; overdetermined ones by least
    squares.  Covariance of eps is Minv diag(sigma^2) Minv^T.
    """
    m = np.asarray(system.matrix, dtype=float)
    rows, cols = m.shape
    if rows < cols:
        raise ValueError("underdetermined system: fewer experiments than categories")
    r = np.asarray(system.observed, dtype=float)
    if rows == cols:
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("singular mixing matrix")
        minv = np.linalg.inv(m)
    else:
        minv = np.linalg.pinv(m)
    eps = minv @ r
    sig = np.zeros(rows) if system.sigmas is None else np.asarray(system.sigmas, dtype=float)
    cov = minv @ np.diag(sig**2) @ minv.T
    return dataclasses.replace(
        system,
        epsilons=tuple(float(v) for v in eps),
        epsilon_sigmas=tuple(float(v) for v in np.sqrt(np.diag(cov))),
        epsilon_covariance=tuple(tuple(float(v) for v in row) for row in cov),
    )


def _building_blocks_raw(eps: np.ndarray, n: int) -> np.ndarray:
    local = 1.0 - (1.0 - eps[0]) ** (1.0 / n)
    base = (1.0 - local) ** (n - 2)
    classes = 1.0 - (1.0 - eps[1:]) / base
    return np.concatenate([[local], classes, [classes.mean()]])


def extract_building_block_rates(
    epsilons, n: int,
    covariance=None,
) -> BuildingBlockRates:
    """Break category rates into a per-qubit local rate and per-class CNOT
    rates.

    The first category must be the CNOT-free one; each further category is
    one CNOT class on top of n - 2 idling qubits.  Uncertainties, when a
    covariance for the categories is given, come from a numerical-Jacobian
    delta method.
    """
    eps = np.asarray(epsilons, dtype=float)
    if eps.ndim != 1 or len(eps) < 2:
        raise ValueError("need the local category plus at least one CNOT class")
    if np.any((eps < 0.0) | (eps > 1.0)):
        raise ValueError("category rates must lie in [0, 1]")
    if n < 2:
        raise ValueError("building-block split needs n >= 2")
    vals = _building_blocks_raw(eps, n)
    flagged = bool(np.any(~np.isfinite(vals)) or np.any((vals < 0.0) | (vals > 1.0)))
    local_sigma = class_sigmas = cnot_sigma = None
    if covariance is not None:
        cov = np.asarray(covariance, dtype=float)
        if cov.shape != (len(eps), len(eps)):
            raise ValueError("covariance shape must match the category count")
        h = 1e-7
        jac = np.empty((len(vals), len(eps)))
        for j in range(len(eps)):
            step = np.zeros_like(eps)
            step[j] = h
            jac[:, j] = (_building_blocks_raw(eps + step, n)
                         - _building_blocks_raw(eps - step, n)) / (2.0 * h)
        out_cov = jac @ cov @ jac.T
        sig = np.sqrt(np.maximum(np.diag(out_cov), 0.0))
        local_sigma = float(sig[0])
        class_sigmas = tuple(float(v) for v in sig[1:-1])
        cnot_sigma = float(sig[-1])
    return BuildingBlockRates(
        local=float(vals[0]),
        cnot_classes=tuple(float(v) for v in vals[1:-1]),
        cnot=float(vals[-1]),
        flagged=flagged,
        local_sigma=local_sigma,
        class_sigmas=class_sigmas,
        cnot_sigma=cnot_sigma,
    )


def crb_rescale(r: float, alpha: float) -> float:
    """Per-native-gate rescaling of a compiled-group error rate, where
    alpha is the mean native cost of one compiled element."""
    if not 0.0 <= r < 1.0:
        raise ValueError(f"r must lie in [0, 1), got {r}")
    if alpha <= 0.0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return 1.0 - (1.0 - r) ** (1.0 / alpha)


def theory_pm(m, eps_omega: float, n: int):
    """Predicted success probability at length m for layer error rate
    eps_omega, decaying to the uniform-outcome floor 2^-n."""
    if not 0.0 <= eps_omega <= 1.0:
        raise ValueError(f"eps_omega must lie in [0, 1], got {eps_omega}")
    a = 2.0**-n
    decay = np.power(1.0 - eps_omega, np.asarray(m, dtype=float))
    out = a + (1.0 - a) * decay
    return float(out) if np.ndim(out) == 0 else out
