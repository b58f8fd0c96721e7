"""Conditional-independence and invariance answer sources.

A provider answers two query families for settings ``k = 0..K``:

* ``ci_within(k, i, j, c)``: is ``X_i _||_ X_j | X_c`` in setting ``k``?
* ``invariance(k, j, c)``: is ``p(X_j | X_c)`` the same in settings 0 and ``k``?

:class:`OracleCi` reads the answers off twin graphs; :class:`FisherZCi`
tests them on data.  Discovery routines see providers through a *scope*
that maps a vertex list onto provider queries.
"""

from __future__ import annotations

import json
import logging
import math
import os
from abc import ABC, abstractmethod
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import norm

from .errors import DataError, DegenerateConditioning, InsufficientData, InvalidArgument
from .graph import DagWithSelection
from .twin import TargetCollection, build_twin, implies_ci, implies_invariance

__all__ = [
    "CiProvider",
    "OracleCi",
    "FisherZCi",
    "Dataset",
    "fisher_z",
    "fisher_z_from_corr",
    "default_alpha",
    "TestScope",
    "SettingScope",
    "PooledScope",
]

log = logging.getLogger(__name__)


def default_alpha(d: int) -> float:
    """0.05 up to ten variables, 0.01 above."""
    return 0.05 if d <= 10 else 0.01


class CiProvider(ABC):
    d: int
    n_settings: int

    @abstractmethod
    def ci_within(self, k: int, i: int, j: int, c: Iterable[int] = ()) -> bool:
        """True when ``X_i`` and ``X_j`` are judged independent given ``X_c`` in setting ``k``."""

    @abstractmethod
    def invariance(self, k: int, j: int, c: Iterable[int] = ()) -> bool:
        """True when ``p(X_j | X_c)`` is judged unchanged between settings 0 and ``k``."""

    def _check_ci(self, k: int, i: int, j: int, c: frozenset[int]) -> None:
        if not 0 <= k < self.n_settings:
            raise InvalidArgument(f"setting {k} out of range")
        if i == j or i in c or j in c:
            raise InvalidArgument("need i != j and i, j outside the conditioning set")
        for v in (i, j, *c):
            if not 0 <= v < self.d:
                raise InvalidArgument(f"unknown variable {v}")

    def _check_inv(self, k: int, j: int, c: frozenset[int]) -> None:
        if not 1 <= k < self.n_settings:
            raise InvalidArgument("invariance queries need an interventional setting k >= 1")
        if j in c:
            raise InvalidArgument("j must be outside the conditioning set")
        for v in (j, *c):
            if not 0 <= v < self.d:
                raise InvalidArgument(f"unknown variable {v}")


class OracleCi(CiProvider):
    """Answers read from the twin graphs of a known model."""

    def __init__(self, g: DagWithSelection, targets: TargetCollection | Sequence[Iterable[int]]):
        if not isinstance(targets, TargetCollection):
            targets = TargetCollection(tuple(targets))
        self.g = g
        self.targets = targets
        self.d = g.d
        self.n_settings = len(targets)
        self._twins = [build_twin(g, t) for t in targets]
        self._cache: dict[tuple, bool] = {}

    def ci_within(self, k, i, j, c=()):
        c = frozenset(c)
        key = (k, min(i, j), max(i, j), c)
        hit = self._cache.get(key)
        if hit is None:
            self._check_ci(k, i, j, c)
            hit = self._cache[key] = implies_ci(self._twins[k], i, j, c)
        return hit

    def invariance(self, k, j, c=()):
        c = frozenset(c)
        key = (k, -1, j, c)
        hit = self._cache.get(key)
        if hit is None:
            self._check_inv(k, j, c)
            hit = self._cache[key] = implies_invariance(self._twins[k], j, c)
        return hit


# ---------------------------------------------------------------------------
# Fisher-Z


def _critical(alpha: float) -> float:
    if not 0.0 < alpha < 1.0:
        raise InvalidArgument("alpha must lie in (0, 1)")
    return float(norm.ppf(1.0 - alpha / 2.0))


def _partial_corr(corr: np.ndarray, i: int, j: int, cond: Sequence[int]) -> float:
    if not cond:
        return float(corr[i, j])
    cond = list(cond)
    szz = corr[np.ix_(cond, cond)]
    if np.linalg.cond(szz) > 1e12:
        raise DegenerateConditioning(f"conditioning set {cond} is (numerically) singular")
    sxz = corr[np.ix_([i, j], cond)]
    resid = corr[np.ix_([i, j], [i, j])] - sxz @ np.linalg.solve(szz, sxz.T)
    vi, vj = resid[0, 0], resid[1, 1]
    if vi <= 1e-12 or vj <= 1e-12:
        raise DegenerateConditioning("a tested variable is determined by the conditioning set")
    return float(resid[0, 1] / math.sqrt(vi * vj))


def _z_stat(r: float, n: int, size: int) -> float:
    dof = n - size - 3
    if dof <= 0:
        raise InsufficientData(f"n={n} too small for a conditioning set of size {size}")
    r = min(1.0, max(-1.0, r))
    if abs(r) >= 1.0:
        return math.inf
    return math.sqrt(dof) * abs(math.atanh(r))


def fisher_z_from_corr(corr: np.ndarray, n: int, i: int, j: int, cond: Sequence[int],
                       alpha: float) -> tuple[float, bool]:
    """Fisher-Z test of ``i _||_ j | cond`` from a correlation matrix of ``n`` rows."""
    stat = _z_stat(_partial_corr(corr, i, j, cond), n, len(cond))
    return stat, stat < _critical(alpha)


def fisher_z(x: np.ndarray, y: np.ndarray, z_cols: np.ndarray | Sequence[np.ndarray] | None,
             alpha: float) -> tuple[float, bool]:
    """Fisher-Z partial-correlation test of ``x _||_ y | z``.

    Returns ``(statistic, independent)`` with
    ``statistic = sqrt(n - |z| - 3) * |atanh(r)|``.
    """
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if z_cols is None:
        z = np.empty((x.size, 0))
    else:
        z = np.asarray(z_cols, dtype=float)
        if z.ndim == 1:
            z = z[:, None]
        elif z.shape[0] != x.size and z.shape[1] == x.size:
            z = z.T
    data = np.column_stack([x, y, z])
    n = data.shape[0]
    if n <= z.shape[1] + 3:
        raise InsufficientData(f"n={n} too small for a conditioning set of size {z.shape[1]}")
    std = data.std(axis=0)
    if np.any(std[:2] == 0):
        raise DegenerateConditioning("a tested column is constant")
    if np.any(std[2:] == 0):
        raise DegenerateConditioning("a conditioning column is constant")
    corr = np.corrcoef(data, rowvar=False)
    return fisher_z_from_corr(np.atleast_2d(corr), n, 0, 1, list(range(2, data.shape[1])), alpha)


@dataclass(frozen=True, eq=False)
class Dataset:
    """One ``n_k x D`` matrix per setting; setting 0 is observational."""

    settings: tuple[np.ndarray, ...]
    names: tuple[str, ...]
    targets: tuple[frozenset[int] | None, ...] = ()

    def __post_init__(self):
        mats = tuple(np.array(m, dtype=float) for m in self.settings)
        if not mats:
            raise DataError("a dataset needs at least the observational setting")
        d = len(self.names)
        for k, m in enumerate(mats):
            if m.ndim != 2 or m.shape[1] != d:
                raise DataError(f"setting {k} has shape {m.shape}, expected (n, {d})")
            if not np.all(np.isfinite(m)):
                raise DataError(f"setting {k} contains missing or non-finite values")
            m.setflags(write=False)
        targets = tuple(self.targets) if self.targets else (None,) * len(mats)
        if len(targets) != len(mats):
            raise DataError("targets must list one entry per setting")
        object.__setattr__(self, "settings", mats)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "targets", targets)

    @property
    def d(self) -> int:
        return len(self.names)

    @property
    def n_settings(self) -> int:
        return len(self.settings)

    def to_csv(self, directory: str | os.PathLike) -> Path:
        """Write one CSV per setting plus ``manifest.json``; returns the manifest path."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        entries = []
        for k, m in enumerate(self.settings):
            name = f"setting_{k}.csv"
            np.savetxt(directory / name, m, delimiter=",", header=",".join(self.names),
                       comments="", fmt="%.17g")
            entry = {"k": k, "path": name}
            if self.targets[k] is not None:
                entry["target"] = sorted(self.targets[k])
            entries.append(entry)
        manifest = directory / "manifest.json"
        manifest.write_text(json.dumps({"settings": entries}, indent=2) + "\n")
        return manifest

    @classmethod
    def from_manifest(cls, manifest: str | os.PathLike) -> "Dataset":
        manifest = Path(manifest)
        try:
            spec = json.loads(manifest.read_text())
            entries = sorted(spec["settings"], key=lambda e: int(e["k"]))
        except FileNotFoundError:
            raise
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DataError(f"{manifest}: bad manifest ({exc})") from exc
        if [int(e["k"]) for e in entries] != list(range(len(entries))):
            raise DataError(f"{manifest}: settings must be numbered 0..K without gaps")
        mats, names, targets = [], None, []
        for e in entries:
            path = manifest.parent / e["path"]
            with open(path) as fh:
                header = fh.readline().strip().split(",")
                try:
                    m = np.loadtxt(fh, delimiter=",", ndmin=2)
                except ValueError as exc:
                    raise DataError(f"{path}: {exc}") from exc
            if names is None:
                names = header
            elif header != names:
                raise DataError(f"{path}: header differs from setting 0")
            mats.append(m)
            targets.append(frozenset(e["target"]) if e.get("target") is not None else None)
        return cls(tuple(mats), tuple(names), tuple(targets))


class FisherZCi(CiProvider):
    """Fisher-Z tests on a :class:`Dataset`.

    Invariance queries pool settings 0 and ``k``, append a 0/1 indicator
    column and test its partial correlation with ``X_j``.
    """

    def __init__(self, data: Dataset, alpha: float | None = None):
        self.data = data
        self.d = data.d
        self.n_settings = data.n_settings
        self.alpha = default_alpha(self.d) if alpha is None else float(alpha)
        _critical(self.alpha)
        self._corr: dict[int, np.ndarray] = {}
        self._pooled: dict[int, np.ndarray] = {}
        self._cache: dict[tuple, bool] = {}
        self.degenerate_count = 0

    def _floor(self, n: int, what: str) -> None:
        if n < self.d + 4:
            raise InsufficientData(f"{what} has n={n} rows; at least D+4={self.d + 4} required")

    def _corr_of(self, k: int) -> np.ndarray:
        m = self._corr.get(k)
        if m is None:
            x = self.data.settings[k]
            self._floor(x.shape[0], f"setting {k}")
            m = self._corr[k] = _safe_corr(x)
        return m

    def _pooled_of(self, k: int) -> np.ndarray:
        m = self._pooled.get(k)
        if m is None:
            x0, xk = self.data.settings[0], self.data.settings[k]
            self._floor(x0.shape[0], "setting 0")
            self._floor(xk.shape[0], f"setting {k}")
            zeta = np.concatenate([np.zeros(x0.shape[0]), np.ones(xk.shape[0])])
            m = self._pooled[k] = _safe_corr(np.column_stack([np.vstack([x0, xk]), zeta]))
        return m

    def _decide(self, corr, n, i, j, cond, what) -> bool:
        try:
            return fisher_z_from_corr(corr, n, i, j, cond, self.alpha)[1]
        except DegenerateConditioning as exc:
            self.degenerate_count += 1
            log.warning("%s: %s; treating as dependent", what, exc)
            return False

    def ci_within(self, k, i, j, c=()):
        c = frozenset(c)
        key = (k, min(i, j), max(i, j), c)
        hit = self._cache.get(key)
        if hit is None:
            self._check_ci(k, i, j, c)
            n = self.data.settings[k].shape[0]
            hit = self._cache[key] = self._decide(self._corr_of(k), n, i, j, sorted(c),
                                                  f"ci_within(k={k}, {i}, {j} | {sorted(c)})")
        return hit

    def invariance(self, k, j, c=()):
        c = frozenset(c)
        key = (k, -1, j, c)
        hit = self._cache.get(key)
        if hit is None:
            self._check_inv(k, j, c)
            n = self.data.settings[0].shape[0] + self.data.settings[k].shape[0]
            hit = self._cache[key] = self._decide(self._pooled_of(k), n, self.d, j, sorted(c),
                                                  f"invariance(k={k}, {j} | {sorted(c)})")
        return hit


def _safe_corr(x: np.ndarray) -> np.ndarray:
    std = x.std(axis=0)
    if np.any(std == 0):
        bad = [int(v) for v in np.flatnonzero(std == 0)]
        raise DataError(f"constant column(s) {bad}")
    return np.atleast_2d(np.corrcoef(x, rowvar=False))


# ---------------------------------------------------------------------------
# scopes: which queries a skeleton search over a given vertex list runs


class TestScope(ABC):
    """Maps an independence query over scope vertices onto a provider."""

    __test__ = False  # not a pytest class

    names: tuple[str, ...]

    @property
    def n(self) -> int:
        return len(self.names)

    @abstractmethod
    def independent(self, x: int, y: int, cond: frozenset[int]) -> tuple[bool, frozenset[int]]:
        """Decision plus the separating set to record when independent."""


@dataclass
class SettingScope(TestScope):
    """Queries within one setting over ``X_0..X_{d-1}``."""

    provider: CiProvider
    k: int = 0
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.names:
            self.names = tuple(f"X{i + 1}" for i in range(self.provider.d))

    def independent(self, x, y, cond):
        return self.provider.ci_within(self.k, x, y, cond), frozenset(cond)


@dataclass
class PooledScope(TestScope):
    """Queries over ``X_0..X_{d-1}`` plus the indicator ``zeta`` (index ``d``) for setting ``k``.

    Statements between two X's are only available given the indicator, so
    the indicator is always added to their conditioning set (and recorded in
    the separating set).  The indicator is a root of the underlying model,
    so this never hides a separation.  On data the two settings are pooled
    as they come, so unequal row counts give the indicator an unbalanced
    split and the invariance tests lose some power.
    """

    provider: CiProvider
    k: int = 1
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.names:
            self.names = tuple(f"X{i + 1}" for i in range(self.provider.d)) + ("zeta",)

    @property
    def zeta(self) -> int:
        return self.provider.d

    def independent(self, x, y, cond):
        z = self.zeta
        rest = frozenset(cond) - {z}
        if x == z or y == z:
            other = y if x == z else x
            return self.provider.invariance(self.k, other, rest), rest
        return self.provider.ci_within(self.k, x, y, rest), rest | {z}
