"""Timing harness for the scoring kernels.

Times the three per-sample costs that differ asymptotically: the gated
decomposition (O(MC)), the moments-to-VGMU pipeline (O(C)), and the
pairwise EPKL baseline (O(M^2 C)). When the compiled core is built the
harness can compare it against the numpy fallback.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import backend


@dataclass(frozen=True)
class BenchResult:
    backend: str
    n_members: int
    n_classes: int
    samples: int
    reps: int
    decompose_s: float  # per-sample seconds, median over reps
    vgmu_s: float
    epkl_s: float

    @property
    def epkl_over_vgmu(self) -> float:
        return self.epkl_s / self.vgmu_s

    @property
    def epkl_over_decompose(self) -> float:
        return self.epkl_s / self.decompose_s


def _median_time(fn, reps: int) -> float:
    times = []
    fn()  # warm-up (JIT-free, but primes caches and allocators)
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def random_batch(n_members: int, n_classes: int, samples: int, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return np.ascontiguousarray(rng.dirichlet(np.ones(n_classes), size=(samples, n_members)))


def run_bench(
    n_members: int,
    n_classes: int,
    *,
    samples: int = 64,
    reps: int = 5,
    seed: int = 0,
    backend_name: str | None = None,
) -> BenchResult:
    """Median per-sample wall time of the three scoring paths."""
    impl = backend.get_backend(backend_name or backend.ACTIVE)
    batch = random_batch(n_members, n_classes, samples, seed)
    k = np.ones(n_classes)
    mean, spread_raw = impl.moments_batch(batch, 1e-8)

    t_dec = _median_time(lambda: impl.decompose_batch(batch, k, 1e-8, 1e-8, 1e-8, True), reps)
    t_vgmu = _median_time(lambda: impl.vgmu_batch(mean, spread_raw, 1e-8), reps)
    t_epkl = _median_time(lambda: impl.epkl_batch(batch), reps)
    return BenchResult(
        backend=backend_name or backend.ACTIVE,
        n_members=n_members,
        n_classes=n_classes,
        samples=samples,
        reps=reps,
        decompose_s=t_dec / samples,
        vgmu_s=t_vgmu / samples,
        epkl_s=t_epkl / samples,
    )


def epkl_scaling(
    m_small: int,
    m_large: int,
    n_classes: int,
    *,
    samples: int = 64,
    reps: int = 5,
    seed: int = 0,
    backend_name: str | None = None,
) -> float:
    """Ratio of per-sample EPKL time at m_large vs m_small (quadratic => ~4x)."""
    small = run_bench(m_small, n_classes, samples=samples, reps=reps, seed=seed,
                      backend_name=backend_name)
    large = run_bench(m_large, n_classes, samples=samples, reps=reps, seed=seed,
                      backend_name=backend_name)
    return large.epkl_s / small.epkl_s
