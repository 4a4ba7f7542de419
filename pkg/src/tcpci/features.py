"""Assembles the 150-feature vector per (build, test).

Nine feature groups from three kinds of raw data:

* execution records   -> REC (failure/transition history of the test);
* the test's own file -> TES_COM / TES_PRO / TES_CHN (complexity, process,
  and per-build change metrics);
* the dependency graph + changed files -> F_COV, COD_COV_COM/PRO/CHN,
  DET_COV (covered-file counts, association-weighted metric sums, and
  weighted previously-detected-fault counts).

Anti-leakage rule: no feature of build k reads build k's verdicts or
durations; everything history-derived uses builds strictly before k and
commits up to k.  All mining-backed values are computed against a
:class:`Snapshot`, which freezes the commit-prefix cutoff — the retraining
decay experiment reuses this path with an old snapshot.

Timing: preprocessing (index construction) and measurement (per-build
feature computation) wall-clock are accumulated per group; shared
preprocessing steps attribute their full cost to every group using them.
TES_CHN needs no preprocessing, so its P is 0 by construction.
"""

from __future__ import annotations

import logging
import time
from bisect import bisect_left
from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .catalog import (
    CATALOG,
    CHANGE_METRICS,
    COMPLEXITY_METRICS,
    PROCESS_METRICS,
    FeatureGroup,
)
from .code_analysis import (
    ComplexityMetrics,
    ProcessHistory,
    analyze_file,
    compute_change_metrics,
)
from .coverage import (
    AssociationMiner,
    DependencyGraph,
    PdfIndex,
    normalize_scores,
)
from .matrix import FeatureMatrix
from .model import Build, BuildHistory, FileChange, Verdict, is_failed
from .code_analysis import FileIndex

log = logging.getLogger(__name__)

#: Groups whose values derive from preprocessed snapshots (imputed for
#: tests unknown to an old snapshot in the decay experiment).
SNAPSHOT_GROUPS = (
    FeatureGroup.TES_COM,
    FeatureGroup.TES_PRO,
    FeatureGroup.F_COV,
    FeatureGroup.COD_COV_COM,
    FeatureGroup.COD_COV_PRO,
    FeatureGroup.COD_COV_CHN,
    FeatureGroup.DET_COV,
)

_COV_GROUPS = (
    FeatureGroup.F_COV,
    FeatureGroup.COD_COV_COM,
    FeatureGroup.COD_COV_PRO,
    FeatureGroup.COD_COV_CHN,
    FeatureGroup.DET_COV,
)


@dataclass(frozen=True)
class RecWindow:
    """How many of the latest executions count as "recent"."""

    recent_size: int = 6

    def __post_init__(self):
        if self.recent_size < 1:
            raise ValueError("recent_size must be >= 1")


class _TestHistory:
    """Ordered execution history of one test across builds."""

    def __init__(self):
        self.builds: list[int] = []
        self.failed: list[bool] = []
        self.verdicts: list[Verdict] = []
        self.durations: list[float] = []
        self.fail_builds: list[int] = []
        self.trans_builds: list[int] = []

    def append(self, build: int, verdict: Verdict, duration: float):
        f = is_failed(verdict)
        if self.failed and self.failed[-1] != f:
            self.trans_builds.append(build)
        if f:
            self.fail_builds.append(build)
        self.builds.append(build)
        self.failed.append(f)
        self.verdicts.append(verdict)
        self.durations.append(duration)


class Timings:
    """Per-group preprocessing (P) and measurement (M) seconds."""

    def __init__(self):
        self.p = {g: 0.0 for g in FeatureGroup}
        self.m = {g: 0.0 for g in FeatureGroup}

    @contextmanager
    def preprocessing(self, *groups: FeatureGroup):
        t0 = time.perf_counter()
        yield
        dt = time.perf_counter() - t0
        for g in groups:
            self.p[g] += dt

    @contextmanager
    def measurement(self, *groups: FeatureGroup):
        t0 = time.perf_counter()
        yield
        dt = time.perf_counter() - t0
        for g in groups:
            self.m[g] += dt

    def rows(self) -> list[tuple[str, float, float, float]]:
        return [
            (g.value, self.p[g], self.m[g], self.p[g] + self.m[g])
            for g in FeatureGroup
        ]


@dataclass(frozen=True)
class Snapshot:
    """Preprocessed state frozen at one build: graph plus prefix cutoffs.

    The heavy indices (miner, process history, fault counts) answer
    prefix queries, so a snapshot is just the graph plus the commit count
    visible at its build.
    """

    build: int
    n_commits: int
    graph: DependencyGraph
    miner: AssociationMiner
    process: ProcessHistory
    pdf: PdfIndex
    complexity: dict[str, ComplexityMetrics]


class FeatureExtractor:
    """Computes feature matrices for builds of one history.

    ``sources`` maps repository-relative paths to file text; when omitted,
    files referenced by tests/commits have no static metrics and those
    features default to zero.
    """

    def __init__(
        self,
        history: BuildHistory,
        sources: dict[str, str] | None = None,
        classify=None,
        rec_window: RecWindow = RecWindow(),
        impact_depth: int = 1,
    ):
        self.history = history
        self.rec_window = rec_window
        self.impact_depth = impact_depth
        self.timings = Timings()
        sources = sources or {}

        with self.timings.preprocessing(FeatureGroup.TES_COM, FeatureGroup.COD_COV_COM):
            index = FileIndex(set(sources))
            self._complexity: dict[str, ComplexityMetrics] = {}
            self._entities = {}
            for path in sorted(sources):
                metrics, entity = analyze_file(sources[path], path, index)
                self._complexity[path] = metrics
                self._entities[path] = entity
            self._com_arrays = {
                p: np.array([m.value(n) for n in COMPLEXITY_METRICS])
                for p, m in self._complexity.items()
            }

        with self.timings.preprocessing(*_COV_GROUPS):
            self._graph = DependencyGraph(
                {p: e.import_targets | e.call_targets for p, e in self._entities.items()}
            )
            self._miner = AssociationMiner(history.commit_sequence)

        with self.timings.preprocessing(FeatureGroup.TES_PRO, FeatureGroup.COD_COV_PRO):
            self._process = ProcessHistory(history.commit_sequence)

        with self.timings.preprocessing(FeatureGroup.DET_COV):
            self._pdf = PdfIndex(history.commit_sequence, classify=classify)

        with self.timings.preprocessing(FeatureGroup.REC):
            self._tests: dict[str, _TestHistory] = {}
            self._file_builds: dict[str, list[int]] = {}
            for b in history.builds:
                for r in b.records:
                    self._tests.setdefault(r.test, _TestHistory()).append(
                        b.id, r.verdict, r.duration_ms
                    )
                for p in b.change_set.changed_files:
                    self._file_builds.setdefault(p, []).append(b.id)

        self._pro_cache: dict[tuple[str, int], np.ndarray] = {}
        self._warned_missing: set[str] = set()

    # -- snapshots -------------------------------------------------------

    def snapshot(self, build_id: int) -> Snapshot:
        """Preprocessed state as of a build (commits up to and including it)."""
        n_commits = len(self.history.commits_up_to(build_id))
        return Snapshot(
            build=build_id,
            n_commits=n_commits,
            graph=self._graph,
            miner=self._miner,
            process=self._process,
            pdf=self._pdf,
            complexity=self._complexity,
        )

    # -- REC -------------------------------------------------------------

    def _rec_row(self, test: str, k: int, chn: frozenset[str]) -> np.ndarray:
        out = np.zeros(len(CATALOG))  # only the REC slice is filled here
        th = self._tests.get(test)
        pos = bisect_left(th.builds, k) if th is not None else 0
        sl = CATALOG.group_slice(FeatureGroup.REC)
        rec = np.zeros(sl.stop - sl.start)
        if pos == 0:
            rec[1] = -1.0  # LastFailAge
            rec[2] = -1.0  # LastTransitionAge
            rec[17] = -1.0  # MaxTestFileFailRate (TF = 0)
            rec[18] = -1.0
            out[sl] = rec
            return out
        fails_before = bisect_left(th.fail_builds, k)
        trans_before = bisect_left(th.trans_builds, k)
        rec[0] = k - th.builds[0]  # Age
        rec[1] = (k - th.fail_builds[fails_before - 1] - 1) if fails_before else -1.0
        rec[2] = (k - th.trans_builds[trans_before - 1] - 1) if trans_before else -1.0
        rec[3] = 1.0 if th.failed[pos - 1] else 0.0
        rec[4] = th.durations[pos - 1]

        durations = np.asarray(th.durations[:pos])
        failed = np.asarray(th.failed[:pos])
        verdicts = th.verdicts[:pos]
        w = self.rec_window.recent_size
        lo = max(0, pos - w)

        def stats(a: int) -> tuple[float, float, float, float, float, float]:
            d = durations[a:]
            f = failed[a:]
            v = verdicts[a:]
            n = len(d)
            avg_t = float(d.mean())
            max_t = float(d.max())
            fr = float(f.mean())
            ar = sum(1 for x in v if x is Verdict.ASSERTION_FAILURE) / n
            er = sum(1 for x in v if x is Verdict.EXCEPTION_FAILURE) / n
            tr = float((f[1:] != f[:-1]).sum() / (n - 1)) if n > 1 else 0.0
            return avg_t, max_t, fr, ar, er, tr

        rec[5:11] = stats(lo)
        rec[11:17] = stats(0)

        # MaxTestFileFailRate / MaxTestFileTransitionRate over chn(k)
        def max_file_rate(event_builds: list[int], n_events: int) -> float:
            if n_events == 0:
                return -1.0
            events = event_builds[:n_events]
            best = 0.0
            for f in chn:
                fb = self._file_builds.get(f)
                if not fb:
                    continue
                fb_set = set(fb[: bisect_left(fb, k)])
                hits = sum(1 for b in events if b in fb_set)
                best = max(best, hits / n_events)
            return best

        rec[17] = max_file_rate(th.fail_builds, fails_before)
        rec[18] = max_file_rate(th.trans_builds, trans_before)
        out[sl] = rec
        return out

    # -- per-file metric vectors ----------------------------------------

    def _com_vec(self, path: str) -> np.ndarray:
        vec = self._com_arrays.get(path)
        if vec is None:
            if path not in self._warned_missing:
                log.warning("no source analysis for %s; metrics default to 0", path)
                self._warned_missing.add(path)
            return np.zeros(len(COMPLEXITY_METRICS))
        return vec

    def _pro_vec(self, path: str, n_commits: int) -> np.ndarray:
        key = (path, n_commits)
        vec = self._pro_cache.get(key)
        if vec is None:
            pm = self._process.metrics(path, n_commits - 1) if n_commits else None
            if pm is None:
                vec = np.zeros(len(PROCESS_METRICS))
            else:
                vec = np.array([pm.value(n) for n in PROCESS_METRICS])
            self._pro_cache[key] = vec
        return vec

    # -- matrix assembly -------------------------------------------------

    def _build_changes(self, build: Build) -> list[FileChange]:
        return [
            fc
            for cid in build.change_set.commits
            for fc in self.history.commits[cid].file_changes
        ]

    def matrix(self, build_id: int, snapshot: Snapshot | None = None) -> FeatureMatrix:
        """Feature matrix of one build, one row per executed test.

        With an old ``snapshot``, mining-backed features reflect that
        snapshot's state (the decay experiment); tests unknown to the
        snapshot get snapshot-derived columns imputed with the column mean
        over known rows.
        """
        build = self.history.build(build_id)
        snap = snapshot if snapshot is not None else self.snapshot(build_id)
        tests = sorted(build.tests)
        n = len(tests)
        X = np.zeros((n, len(CATALOG)))
        chn = build.change_set.changed_files
        changes = self._build_changes(build)
        tim = self.timings

        with tim.measurement(FeatureGroup.REC):
            for i, t in enumerate(tests):
                X[i] += self._rec_row(t, build_id, chn)

        sl_com = CATALOG.group_slice(FeatureGroup.TES_COM)
        with tim.measurement(FeatureGroup.TES_COM):
            for i, t in enumerate(tests):
                X[i, sl_com] = self._com_vec(t)

        sl_pro = CATALOG.group_slice(FeatureGroup.TES_PRO)
        with tim.measurement(FeatureGroup.TES_PRO):
            for i, t in enumerate(tests):
                X[i, sl_pro] = self._pro_vec(t, snap.n_commits)

        sl_chn = CATALOG.group_slice(FeatureGroup.TES_CHN)
        chn_metric_cache: dict[str, np.ndarray] = {}

        def chn_vec(path: str) -> np.ndarray:
            vec = chn_metric_cache.get(path)
            if vec is None:
                cm = compute_change_metrics(path, changes)
                vec = np.array([cm.value(name) for name in CHANGE_METRICS])
                chn_metric_cache[path] = vec
            return vec

        with tim.measurement(FeatureGroup.TES_CHN):
            for i, t in enumerate(tests):
                X[i, sl_chn] = chn_vec(t)

        # coverage-driven groups share the covered/changed/impacted sets
        sl_fcov = CATALOG.group_slice(FeatureGroup.F_COV)
        sl_ccom = CATALOG.group_slice(FeatureGroup.COD_COV_COM)
        sl_cpro = CATALOG.group_slice(FeatureGroup.COD_COV_PRO)
        sl_cchn = CATALOG.group_slice(FeatureGroup.COD_COV_CHN)
        sl_det = CATALOG.group_slice(FeatureGroup.DET_COV)
        n_com = len(COMPLEXITY_METRICS)
        n_pro = len(PROCESS_METRICS)

        with tim.measurement(FeatureGroup.F_COV):
            imp = snap.graph.impacted_files(chn, self.impact_depth)
            cov_sets: list[tuple[list[str], list[str]]] = []
            weight_sets: list[tuple[list[float], list[float]]] = []
            for t in tests:
                covered = (
                    snap.graph.covered_files(t) if t in snap.graph.files else frozenset()
                )
                c_files = sorted(covered & chn)
                i_files = sorted(covered & imp)
                c_w = self._weights(t, c_files, snap)
                i_w = self._weights(t, i_files, snap)
                cov_sets.append((c_files, i_files))
                weight_sets.append((c_w, i_w))
            for i in range(n):
                c_files, i_files = cov_sets[i]
                c_w, i_w = weight_sets[i]
                X[i, sl_fcov] = [len(c_files), len(i_files), sum(c_w), sum(i_w)]

        with tim.measurement(FeatureGroup.COD_COV_COM):
            for i in range(n):
                c_files, i_files = cov_sets[i]
                c_w, i_w = weight_sets[i]
                block = np.zeros(2 * n_com)
                for f, w in zip(c_files, c_w):
                    block[:n_com] += w * self._com_vec(f)
                for f, w in zip(i_files, i_w):
                    block[n_com:] += w * self._com_vec(f)
                X[i, sl_ccom] = block

        with tim.measurement(FeatureGroup.COD_COV_PRO):
            for i in range(n):
                c_files, i_files = cov_sets[i]
                c_w, i_w = weight_sets[i]
                block = np.zeros(2 * n_pro)
                for f, w in zip(c_files, c_w):
                    block[:n_pro] += w * self._pro_vec(f, snap.n_commits)
                for f, w in zip(i_files, i_w):
                    block[n_pro:] += w * self._pro_vec(f, snap.n_commits)
                X[i, sl_cpro] = block

        with tim.measurement(FeatureGroup.COD_COV_CHN):
            for i in range(n):
                c_files, _ = cov_sets[i]
                c_w, _ = weight_sets[i]
                block = np.zeros(len(CHANGE_METRICS))
                for f, w in zip(c_files, c_w):
                    block += w * chn_vec(f)
                X[i, sl_cchn] = block

        with tim.measurement(FeatureGroup.DET_COV):
            for i in range(n):
                c_files, i_files = cov_sets[i]
                c_w, i_w = weight_sets[i]
                X[i, sl_det] = [
                    sum(w * snap.pdf.pdf(f, snap.n_commits) for f, w in zip(c_files, c_w)),
                    sum(w * snap.pdf.pdf(f, snap.n_commits) for f, w in zip(i_files, i_w)),
                ]

        if snapshot is not None:
            X = self._impute_unknown(X, tests, snap)

        labels = None
        if build.records:
            by_test = {r.test: r for r in build.records}
            labels = np.array(
                [1.0 if is_failed(by_test[t].verdict) else 0.0 for t in tests]
            )
        return FeatureMatrix(build=build_id, tests=tuple(tests), values=X, labels=labels)

    def _weights(self, test: str, files: list[str], snap: Snapshot) -> list[float]:
        """Normalized association weights of a covered file set.

        A nonempty set with all-zero raw scores falls back to uniform
        weights so the normalized sum is 1 exactly when the set is
        nonempty.
        """
        if not files:
            return []
        raw = [snap.miner.cov_score(f, test, snap.n_commits) for f in files]
        if sum(raw) == 0:
            return [1.0 / len(files)] * len(files)
        return normalize_scores(raw)

    def _impute_unknown(
        self, X: np.ndarray, tests: list[str], snap: Snapshot
    ) -> np.ndarray:
        """Mean-substitute snapshot-derived columns of snapshot-unknown tests."""
        known = np.array([t in snap.graph.files for t in tests])
        if known.all() or not known.any():
            return X
        cols = [i for g in SNAPSHOT_GROUPS for i in CATALOG.group_indices(g)]
        means = X[known][:, cols].mean(axis=0)
        X = X.copy()
        for i, is_known in enumerate(known):
            if not is_known:
                X[i, cols] = means
        return X
