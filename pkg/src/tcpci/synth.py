"""Synthetic coverage-driven CI histories for experiments and tests.

The generator fabricates a small Java repository (source files plus test
files that import the files they exercise), a commit stream whose
co-changes link tests to the files they cover, and per-build execution
records where a test's failure probability grows with the overlap between
its *true* coverage and the build's changed files.  Because the causal
mechanism is coverage, a learner with coverage features has signal to find.

The drift variant gives each test a fixed candidate pool of imports but
rotates which subset is truly covered every ``drift_period`` builds: the
static dependency edges stay valid while the co-change association that
weights them goes stale, which is exactly what the retraining-decay
experiment needs.

With ``risky_count`` set, only a rotating subset of files is dangerous:
a test fails when a changed *risky* file is covered, and commits touching
risky files carry defect-fix messages.  Fault-history features then track
which files matter right now — and mislead once their snapshot is stale.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from pathlib import Path

import numpy as np

from .ingest import DatasetLayout, write_dataset
from .model import (
    Build,
    BuildHistory,
    ChangeSet,
    Commit,
    ExecutionRecord,
    FileChange,
    Verdict,
)


@dataclass(frozen=True)
class SynthConfig:
    n_files: int = 200
    n_tests: int = 100
    n_builds: int = 60
    coverage_size: int = 5  # truly covered files per test
    pool_size: int = 5  # imported candidate files per test (>= coverage_size)
    files_per_build: int = 8
    commits_per_build: int = 2
    base_failure: float = 0.02
    failure_weight: float = 0.9  # failure prob added per full coverage overlap
    co_change_prob: float = 0.3  # test file joins a commit touching a covered file
    flaky_count: int = 5
    flaky_prob: float = 0.05
    duration_mu: float = 4.0  # lognormal parameters for per-test duration (ms)
    duration_sigma: float = 0.5
    fix_message_prob: float = 0.3
    drift_period: int = 0  # 0 = static true coverage
    risky_count: int = 0  # 0 = every covered change is equally dangerous
    risky_fix_prob: float = 0.9  # commit touching a risky file gets a fix message

    def __post_init__(self):
        if self.pool_size < self.coverage_size:
            raise ValueError("pool_size must be >= coverage_size")
        if self.pool_size > self.n_files:
            raise ValueError("pool_size cannot exceed n_files")


@dataclass
class GroundTruth:
    """What the generator actually did, for assertions in tests."""

    pools: dict[str, tuple[str, ...]]  # test -> imported candidate files
    coverage_by_build: dict[int, dict[str, frozenset[str]]] = field(default_factory=dict)
    caused_failures: dict[int, frozenset[str]] = field(default_factory=dict)
    flaky_tests: frozenset[str] = frozenset()


def _file_path(i: int) -> str:
    return f"src/app/F{i}.java"


def _test_path(i: int) -> str:
    return f"src/test/T{i}Test.java"


def _sut_source(i: int) -> str:
    """A small class; branch count varies so complexity metrics spread."""
    branches = 1 + i % 4
    body = "\n".join(
        f"        if (x > {j}) {{ total += {j}; }}" for j in range(branches)
    )
    return (
        "package app;\n\n"
        f"public class F{i} {{\n"
        "    private int total = 0;\n\n"
        "    public int work(int x) {\n"
        f"{body}\n"
        "        return total;\n"
        "    }\n"
        "}\n"
    )


def _test_source(i: int, pool: tuple[str, ...]) -> str:
    imports = "\n".join(
        f"import app.{Path(p).stem};" for p in pool
    )
    calls = "\n".join(
        f"        new {Path(p).stem}().work({j});" for j, p in enumerate(pool)
    )
    return (
        f"{imports}\n\n"
        f"public class T{i}Test {{\n"
        "    public void run() {\n"
        f"{calls}\n"
        "    }\n"
        "}\n"
    )


def _commit_hash(seed: int, build: int, j: int) -> str:
    return hashlib.sha1(f"{seed}/{build}/{j}".encode()).hexdigest()


def generate_synthetic_history(
    config: SynthConfig = SynthConfig(), seed: int = 0
) -> tuple[BuildHistory, dict[str, str], GroundTruth]:
    """Returns (history, sources, ground truth); deterministic per seed."""
    rng = np.random.default_rng(seed)
    cfg = config
    files = [_file_path(i) for i in range(cfg.n_files)]
    tests = [_test_path(i) for i in range(cfg.n_tests)]

    pools = {
        tests[i]: tuple(
            files[j]
            for j in sorted(rng.choice(cfg.n_files, size=cfg.pool_size, replace=False))
        )
        for i in range(cfg.n_tests)
    }
    flaky = frozenset(
        tests[i]
        for i in rng.choice(cfg.n_tests, size=min(cfg.flaky_count, cfg.n_tests), replace=False)
    )
    truth = GroundTruth(pools=pools, flaky_tests=flaky)

    sources = {p: _sut_source(i) for i, p in enumerate(files)}
    for i, t in enumerate(tests):
        sources[t] = _test_source(i, pools[t])

    base_duration = {
        t: float(np.exp(rng.normal(cfg.duration_mu, cfg.duration_sigma)))
        for t in tests
    }

    def coverage_at(test: str, build_id: int) -> frozenset[str]:
        pool = pools[test]
        if cfg.drift_period <= 0 or cfg.pool_size == cfg.coverage_size:
            return frozenset(pool[: cfg.coverage_size])
        epoch = (build_id - 1) // cfg.drift_period
        start = (epoch * cfg.coverage_size) % cfg.pool_size
        picked = [pool[(start + j) % cfg.pool_size] for j in range(cfg.coverage_size)]
        return frozenset(picked)

    def risky_at(build_id: int) -> frozenset[str] | None:
        if cfg.risky_count <= 0:
            return None
        epoch = 0 if cfg.drift_period <= 0 else (build_id - 1) // cfg.drift_period
        start = (epoch * cfg.risky_count) % cfg.n_files
        return frozenset(files[(start + j) % cfg.n_files] for j in range(cfg.risky_count))

    t0 = datetime(2024, 1, 1, tzinfo=timezone.utc)
    builds = []
    commit_store: dict[str, Commit] = {}
    fix_words = ["fix", "bug", "patch", "repair"]
    other_words = ["add", "refactor", "update", "cleanup"]

    for k in range(1, cfg.n_builds + 1):
        risky = risky_at(k)
        cov_now = {t: coverage_at(t, k) for t in tests}
        truth.coverage_by_build[k] = cov_now
        changed_sut = [
            files[j]
            for j in sorted(rng.choice(cfg.n_files, size=cfg.files_per_build, replace=False))
        ]
        # distribute changed files over this build's commits; tests that
        # truly cover a changed file sometimes co-change with it
        commit_ids = []
        assignment = rng.integers(0, cfg.commits_per_build, size=len(changed_sut))
        for j in range(cfg.commits_per_build):
            commit_files = [f for f, a in zip(changed_sut, assignment) if a == j]
            if not commit_files:
                continue
            co_changed: set[str] = set()
            for f in commit_files:
                for t in tests:
                    if f in cov_now[t] and rng.random() < cfg.co_change_prob:
                        co_changed.add(t)
            all_paths = commit_files + sorted(co_changed)
            changes = tuple(
                FileChange(
                    path=p,
                    lines_added=int(rng.integers(1, 30)),
                    lines_deleted=int(rng.integers(0, 10)),
                    added_chunks=(int(rng.integers(1, 40)),),
                )
                for p in all_paths
            )
            if risky is None:
                is_fix = rng.random() < cfg.fix_message_prob
            else:
                touches_risky = any(f in risky for f in commit_files)
                p_fix = cfg.risky_fix_prob if touches_risky else cfg.fix_message_prob
                is_fix = rng.random() < p_fix
            word = fix_words[k % 4] if is_fix else other_words[k % 4]
            cid = _commit_hash(seed, k, j)
            commit_store[cid] = Commit(
                id=cid,
                timestamp=t0 + timedelta(hours=k, minutes=j),
                author=f"dev{int(rng.integers(0, 5))}",
                message=f"{word} module {k}-{j}",
                file_changes=changes,
            )
            commit_ids.append(cid)

        changed_all = frozenset(
            p for cid in commit_ids for p in commit_store[cid].changed_files
        )
        caused = set()
        records = []
        for t in tests:
            cov = cov_now[t]
            dangerous = changed_all if risky is None else (changed_all & risky)
            overlap = len(cov & dangerous) / max(len(cov), 1)
            p_fail = min(cfg.base_failure + cfg.failure_weight * overlap, 0.95)
            fails = rng.random() < p_fail
            if fails and overlap > 0:
                caused.add(t)
            if not fails and t in flaky and rng.random() < cfg.flaky_prob:
                fails = True
            verdict = (
                Verdict(int(rng.choice([1, 2]))) if fails else Verdict.PASSED
            )
            records.append(
                ExecutionRecord(
                    build=k,
                    test=t,
                    verdict=verdict,
                    duration_ms=base_duration[t],
                )
            )
        truth.caused_failures[k] = frozenset(caused)
        builds.append(
            Build(
                id=k,
                change_set=ChangeSet(k, tuple(commit_ids), changed_all),
                records=tuple(sorted(records, key=lambda r: r.test)),
                wall_clock=t0 + timedelta(hours=k),
            )
        )

    return BuildHistory(builds, commit_store), sources, truth


def write_synthetic_dataset(
    root: Path, config: SynthConfig = SynthConfig(), seed: int = 0
) -> tuple[DatasetLayout, GroundTruth]:
    """Generate and persist a dataset (CSVs, commits.jsonl, src tree)."""
    history, sources, truth = generate_synthetic_history(config, seed)
    layout = write_dataset(history, root)
    for path, text in sources.items():
        full = root / path
        full.parent.mkdir(parents=True, exist_ok=True)
        full.write_text(text, encoding="utf-8")
    return layout, truth


def load_sources(layout: DatasetLayout) -> dict[str, str]:
    """Read the dataset's source snapshot into a {path: text} mapping."""
    src = layout.src_dir
    if src is None:
        return {}
    return {
        str(p.relative_to(src.parent)): p.read_text(encoding="utf-8", errors="replace")
        for p in src.rglob("*.java")
    }
