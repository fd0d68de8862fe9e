"""End-to-end reconstruction under the two parallel schedules.

``per_z``      one frame in flight; the z-mesh solves run in parallel.
``per_frame``  frames run in parallel; each frame loops over z sequentially.

Both schedules call the same per-z kernel on the same inputs, so results are
bit-identical whatever the schedule, worker count or completion order.
"""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from . import dbar
from .dnmap import dn_matrix
from .errors import ConfigError, InputError, NumericalError
from .geometry import electrode_quadrature
from .patterns import pattern_set, project_voltages
from .scattering import grid_coeffs, texp_dif
from .zmesh import get_zmesh

SCHEDULES = ("per_z", "per_frame")
BACKENDS = ("thread", "process")
CONVOLUTIONS = ("padded", "circular")


@dataclass
class ReconConfig:
    s: float = 3.8
    n: int = 4
    R: float = 3.8
    zmesh: object = "coarse"
    schedule: str = "per_z"
    workers: int = 1
    backend: str = "process"
    tol: float = 1e-4
    maxit: int = 20
    warm_start: bool = False
    symmetrize: bool = True
    convolution: str = "padded"
    include_reference: bool = False

    def __post_init__(self):
        self.schedule = str(self.schedule).replace("-", "_")
        if self.schedule not in SCHEDULES:
            raise ConfigError("schedule", f"expected one of {SCHEDULES}, got {self.schedule!r}")
        if self.backend not in BACKENDS:
            raise ConfigError("backend", f"expected one of {BACKENDS}, got {self.backend!r}")
        if self.convolution not in CONVOLUTIONS:
            raise ConfigError("convolution", f"expected one of {CONVOLUTIONS}, got {self.convolution!r}")
        if not isinstance(self.workers, (int, np.integer)) or self.workers < 1:
            raise ConfigError("workers", f"must be an integer >= 1, got {self.workers!r}")
        if not self.R > 0:
            raise ConfigError("R", f"truncation radius must be positive, got {self.R}")
        if self.s < self.R:
            raise ConfigError("s", f"k-grid half-width {self.s} is smaller than R={self.R}")
        if not isinstance(self.n, (int, np.integer)) or self.n < 2:
            raise ConfigError("n", f"grid exponent must be an integer >= 2, got {self.n!r}")
        if not self.tol > 0:
            raise ConfigError("tol", f"must be positive, got {self.tol}")
        if not isinstance(self.maxit, (int, np.integer)) or self.maxit < 1:
            raise ConfigError("maxit", f"must be an integer >= 1, got {self.maxit!r}")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, obj):
        known = {f.name for f in fields(cls)}
        extra = set(obj) - known
        if extra:
            raise ConfigError(sorted(extra)[0], "unknown reconstruction option")
        return cls(**obj)


@dataclass(frozen=True, eq=False)
class Setup:
    """Frame-independent state, computed once and shared read-only."""

    config: ReconConfig
    geom: object
    patterns: object
    kgrid: object
    green: object
    coeffs: object
    qweights: np.ndarray
    ref_dn: object
    zmesh: np.ndarray


def prepare(geom, reference_voltages, config=None, skip=0, amplitude=1.0, zmesh=None):
    """Setup phase: patterns, grids, Green's function FFT, coefficients and reference DN matrix."""
    config = config or ReconConfig()
    if geom.electrodes is None:
        raise InputError("geometry has no electrodes")
    quad = electrode_quadrature(geom)
    patterns = pattern_set(geom.electrodes.L, skip, amplitude, quad.weights)
    kgrid = dbar.build_kgrid(config.s, config.n, config.R)
    green = dbar.build_green(kgrid, padded=config.convolution == "padded")
    coeffs = grid_coeffs(kgrid, config.R, geom, patterns)
    qweights = dbar.quadrature_weights(kgrid, kgrid.disk_mask(config.R))
    ref = project_voltages(reference_voltages, patterns)
    ref_dn = dn_matrix(patterns, ref, geom, symmetrize=config.symmetrize)
    z = get_zmesh(geom, config.zmesh) if zmesh is None else np.asarray(zmesh, dtype=complex).ravel()
    return Setup(config, geom, patterns, kgrid, green, coeffs, qweights, ref_dn, z)


def frame_multipliers(voltages, setup, index=0):
    """Steps before the z-loop: DN matrix, scattering field, multipliers for all z."""
    frame = project_voltages(voltages, setup.patterns, frame_index=index)
    dn = dn_matrix(setup.patterns, frame, setup.geom, symmetrize=setup.config.symmetrize)
    t = texp_dif(dn, setup.ref_dn, setup.coeffs, setup.kgrid, setup.config.R)
    return dn, t, dbar.multiplier_field(t, setup.zmesh)


@dataclass
class FrameResult:
    index: int
    sigma: np.ndarray
    mu0: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    condition: float
    loop_s: float = 0.0
    mu: np.ndarray | None = None

    @property
    def max_imag_ratio(self):
        return float(np.max(np.abs(self.mu0.imag) / np.abs(self.mu0)))


def _solve_z(setup, rho_z, mu_init=None, keep_mu=False):
    cfg = setup.config
    r = dbar.solve_point(rho_z, setup.green, setup.qweights, tol=cfg.tol, maxit=cfg.maxit, mu_init=mu_init)
    return (r.mu0, r.sigma, r.iterations, r.residual, r.converged, r.mu if keep_mu else None)


def _collect(index, parts, condition, loop_s, keep_mu):
    mu0 = np.array([p[0] for p in parts], dtype=complex)
    return FrameResult(
        index=index,
        sigma=np.array([p[1] for p in parts]),
        mu0=mu0,
        iterations=np.array([p[2] for p in parts], dtype=int),
        residual=np.array([p[3] for p in parts]),
        converged=np.array([p[4] for p in parts], dtype=bool),
        condition=condition,
        loop_s=loop_s,
        mu=np.stack([p[5] for p in parts]) if keep_mu else None,
    )


def _frame_sequential(setup, voltages, index):
    try:
        dn, _, mf = frame_multipliers(voltages, setup, index)
        t0 = time.perf_counter()
        parts = [_solve_z(setup, mf.rho[i]) for i in range(len(mf.zmesh))]
    except NumericalError as exc:
        raise _tagged(exc, index)
    return _collect(index, parts, dn.condition, time.perf_counter() - t0, False)


def _tagged(exc, index):
    if exc.frame_index is None:
        exc.frame_index = index
        exc.args = (f"frame {index}: {exc.args[0]}",)
    return exc


# --- worker pool -------------------------------------------------------------

_WORKER_SETUP = None


def _init_worker(setup):
    global _WORKER_SETUP
    _WORKER_SETUP = setup


def _remote(job):
    fn, item = job
    return fn(_WORKER_SETUP, item)


def _z_task(setup, item):
    rho_z, mu_init, keep = item
    return _solve_z(setup, rho_z, mu_init, keep)


def _frame_task(setup, item):
    voltages, index = item
    return _frame_sequential(setup, voltages, index)


class WorkerPool:
    """Thread or process pool sharing one read-only setup; ``workers == 1`` runs inline.

    Process workers receive the setup once through the pool initializer.
    Results come back in submission order whatever the completion order.
    """

    def __init__(self, setup, workers=None, backend=None):
        self.setup = setup
        self.workers = int(workers or setup.config.workers)
        self.backend = backend or setup.config.backend
        if self.backend not in BACKENDS:
            raise ConfigError("backend", f"expected one of {BACKENDS}, got {self.backend!r}")
        self._ex = None

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.close()

    def start(self):
        if self._ex is None and self.workers > 1:
            if self.backend == "process":
                self._ex = ProcessPoolExecutor(self.workers, initializer=_init_worker, initargs=(self.setup,))
            else:
                self._ex = ThreadPoolExecutor(self.workers)
        return self

    def close(self):
        if self._ex is not None:
            self._ex.shutdown()
            self._ex = None

    def map(self, fn, items):
        if self._ex is None:
            return [fn(self.setup, it) for it in items]
        if self.backend == "process":
            return list(self._ex.map(_remote, [(fn, it) for it in items], chunksize=1))
        return list(self._ex.map(lambda it: fn(self.setup, it), items))


# --- schedules ---------------------------------------------------------------

def reconstruct_frame(voltages, setup, pool=None, index=0, mu_init=None, keep_mu=False):
    """Schedule 1: vectorised pre-loop steps, then the z-loop in parallel."""
    own = pool is None
    pool = pool or WorkerPool(setup).start()
    try:
        dn, _, mf = frame_multipliers(voltages, setup, index)
        nz = len(mf.zmesh)
        inits = [None] * nz if mu_init is None else list(mu_init)
        t0 = time.perf_counter()
        parts = pool.map(_z_task, [(mf.rho[i], inits[i], keep_mu) for i in range(nz)])
        loop = time.perf_counter() - t0
    except NumericalError as exc:
        raise _tagged(exc, index)
    finally:
        if own:
            pool.close()
    res = _collect(index, parts, dn.condition, loop, keep_mu)
    _check_frame(res)
    return res


def reconstruct_batch(frames, setup, pool=None, indices=None):
    """Schedule 2: frames in parallel, each frame's z-loop sequential.

    Returns ``(results, loop_s)`` with results in input order.
    """
    frames = list(frames)
    indices = list(range(len(frames))) if indices is None else list(indices)
    own = pool is None
    pool = pool or WorkerPool(setup).start()
    try:
        t0 = time.perf_counter()
        results = pool.map(_frame_task, list(zip(frames, indices)))
        loop = time.perf_counter() - t0
    finally:
        if own:
            pool.close()
    for r in results:
        _check_frame(r)
    return results, loop


def _check_frame(res):
    bad = ~np.isfinite(res.sigma) | ~np.isfinite(res.mu0)
    if np.any(bad):
        raise NumericalError(f"frame {res.index}: non-finite conductivity at {int(bad.sum())} z-points", frame_index=res.index)


@dataclass
class ReconSequence:
    """Images and diagnostics for a run, one row per reconstructed frame."""

    indices: list
    sigma: np.ndarray
    mu0: np.ndarray
    iterations: np.ndarray
    residual: np.ndarray
    converged: np.ndarray
    condition: np.ndarray
    zmesh: np.ndarray
    schedule: str
    workers: int
    timings: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.indices)

    @property
    def imag_ratio(self):
        """max over z of |Im mu0| / |mu0|, per frame."""
        return np.max(np.abs(self.mu0.imag) / np.abs(self.mu0), axis=1)

    @property
    def max_iterations(self):
        return self.iterations.max(axis=1)

    @property
    def s_per_frame(self):
        return self.timings.get("total_s", float("nan")) / max(len(self), 1)


def _sequence(results, setup, timings, workers):
    cat = lambda name, dt=None: np.stack([np.asarray(getattr(r, name), dtype=dt) for r in results])
    return ReconSequence(
        indices=[r.index for r in results],
        sigma=cat("sigma"),
        mu0=cat("mu0"),
        iterations=cat("iterations"),
        residual=cat("residual"),
        converged=cat("converged"),
        condition=np.array([r.condition for r in results]),
        zmesh=setup.zmesh,
        schedule=setup.config.schedule,
        workers=workers,
        timings=timings,
    )


def reconstruct(frames, setup, indices=None, pool=None, setup_s=0.0):
    """Run every frame under the configured schedule and gather a ReconSequence."""
    cfg = setup.config
    frames = list(frames)
    if not frames:
        raise InputError("nothing to reconstruct: no frames selected")
    indices = list(range(len(frames))) if indices is None else list(indices)
    t0 = time.perf_counter()
    own = pool is None
    pool = pool or WorkerPool(setup).start()
    try:
        if cfg.schedule == "per_frame":
            results, loop = reconstruct_batch(frames, setup, pool, indices)
        else:
            results, loop, prev = [], 0.0, None
            for v, i in zip(frames, indices):
                r = reconstruct_frame(v, setup, pool, i, mu_init=prev, keep_mu=cfg.warm_start)
                if cfg.warm_start:
                    prev, r.mu = r.mu, None
                results.append(r)
                loop += r.loop_s
    finally:
        if own:
            pool.close()
    total = time.perf_counter() - t0 + setup_s
    timings = {"setup_s": setup_s, "loop_s": loop, "total_s": total}
    return _sequence(results, setup, timings, pool.workers)


def select_frames(session, include_reference=False):
    pairs = list(zip(session.frame_indices, session.frames))
    if not include_reference:
        pairs = [(i, f) for i, f in pairs if i != session.reference_index]
    return [f for _, f in pairs], [i for i, _ in pairs]


def reconstruct_session(session, config=None, geom=None, zmesh=None, pool_workers=None):
    """Timed run from voltage ingestion to images: setup, then all selected frames."""
    config = config or ReconConfig()
    if pool_workers is not None:
        config = replace(config, workers=pool_workers)
    geom = geom or session.domain()
    t0 = time.perf_counter()
    setup = prepare(geom, session.reference, config, session.skip, session.amplitude, zmesh)
    setup_s = time.perf_counter() - t0
    frames, idx = select_frames(session, config.include_reference)
    return reconstruct(frames, setup, idx, setup_s=setup_s)
