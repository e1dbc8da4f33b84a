"""Tolerances and sampling knobs.

A single :class:`Options` instance is threaded through every numerical
routine.  All thresholds are relative to ``scale(M) = max(1, ||M||)`` unless
noted otherwise.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace


@dataclass(frozen=True)
class Options:
    tol_rank: float = 1e-9
    tol_orth: float = 1e-10
    tol_eig: float = 1e-11
    # parameter resolution for crossing localization
    lambda_res: float = 1e-10
    # relative margin kept between eigenvalues and the window edges +-a
    margin: float = 0.1
    # None -> use the path's smoothness_hint
    samples: int | None = None
    max_depth: int = 24
    # initial cells of the crossing scan
    scan_samples: int = 256
    # cells narrower than this are handed to the root finders
    min_cell: float = 1e-7
    # speed-bound safety factor of the exclusion test
    speed_safety: float = 2.0
    # half-width of the finite-difference window for Lagrangian crossing forms
    maslov_window: float = 1e-5
    verify_doubling: bool = False
    retry_degenerate: bool = False
    # Hamiltonian systems
    grid: int = 1000
    sweep_samples: int = 2048
    sweep_res: float = 1e-8
    drift_tol: float = 1e-8

    def with_(self, **changes) -> "Options":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return asdict(self)


DEFAULT = Options()


def resolve(opts: Options | None) -> Options:
    return DEFAULT if opts is None else opts
