import os
import subprocess
from datetime import datetime, timezone
from pathlib import Path

import pytest

from tcpci.errors import (
    DuplicateRecordError,
    RepoNotFoundError,
    SchemaError,
    UnresolvableRefError,
)
from tcpci.ingest import (
    DatasetLayout,
    ingest_exec_records,
    ingest_git_history,
    select_primary_job,
    write_dataset,
)
from tcpci.model import ExecutionRecord, Verdict
from tcpci.synth import SynthConfig, generate_synthetic_history


def test_select_primary_job_most_tests_then_smallest_id():
    jobs = {
        "j2": [ExecutionRecord(1, "a", Verdict.PASSED, 1.0)],
        "j1": [
            ExecutionRecord(1, "a", Verdict.PASSED, 1.0),
            ExecutionRecord(1, "b", Verdict.PASSED, 1.0),
        ],
    }
    assert select_primary_job(jobs) == "j1"
    jobs["j0"] = list(jobs["j1"])
    assert select_primary_job(jobs) == "j0"


def test_round_trip_is_lossless(tmp_path):
    history, _, _ = generate_synthetic_history(
        SynthConfig(n_files=10, n_tests=5, n_builds=6, files_per_build=3), seed=7
    )
    layout = write_dataset(history, tmp_path / "ds")
    again = ingest_exec_records(layout)
    assert again == history
    layout2 = write_dataset(again, tmp_path / "ds2")
    assert (tmp_path / "ds" / "builds.csv").read_text() == (
        tmp_path / "ds2" / "builds.csv"
    ).read_text()
    assert (tmp_path / "ds" / "commits.jsonl").read_text() == (
        tmp_path / "ds2" / "commits.jsonl"
    ).read_text()


def _write_min_dataset(root: Path, exec_rows: list[str] | None = None):
    root.mkdir(parents=True, exist_ok=True)
    sha = "a" * 40
    (root / "builds.csv").write_text(
        f"build_id,timestamp_iso8601,commits\n1,2024-01-01T00:00:00+00:00,{sha}\n"
    )
    rows = exec_rows if exec_rows is not None else ["1,j0,t.java,0,10.0"]
    (root / "exec_records.csv").write_text(
        "build_id,job_id,test_path,verdict,duration_ms\n" + "\n".join(rows) + "\n"
    )
    (root / "commits.jsonl").write_text(
        '{"hash": "' + sha + '", "timestamp": "2024-01-01T00:00:00+00:00", '
        '"author": "dev", "message": "msg", '
        '"files": [{"path": "a.java", "added": 1, "deleted": 0}]}\n'
    )


def test_schema_error_reports_line_number(tmp_path):
    _write_min_dataset(tmp_path / "ds", exec_rows=["1,j0,t.java,9,10.0"])
    with pytest.raises(SchemaError, match=":2"):
        ingest_exec_records(DatasetLayout(tmp_path / "ds"))


def test_duplicate_record_rejected(tmp_path):
    _write_min_dataset(
        tmp_path / "ds", exec_rows=["1,j0,t.java,0,10.0", "1,j0,t.java,0,11.0"]
    )
    with pytest.raises(DuplicateRecordError):
        ingest_exec_records(DatasetLayout(tmp_path / "ds"))


def test_bad_commit_hash_rejected(tmp_path):
    root = tmp_path / "ds"
    _write_min_dataset(root)
    (root / "builds.csv").write_text(
        "build_id,timestamp_iso8601,commits\n1,2024-01-01T00:00:00+00:00,nothex\n"
    )
    with pytest.raises(SchemaError, match="40-hex"):
        ingest_exec_records(DatasetLayout(root))


def test_unknown_build_id_in_exec_records(tmp_path):
    _write_min_dataset(tmp_path / "ds", exec_rows=["7,j0,t.java,0,10.0"])
    with pytest.raises(SchemaError, match="not in builds.csv"):
        ingest_exec_records(DatasetLayout(tmp_path / "ds"))


# --- git mining ---------------------------------------------------------

GIT_ENV = {
    **os.environ,
    "GIT_AUTHOR_NAME": "dev",
    "GIT_AUTHOR_EMAIL": "dev@example.com",
    "GIT_COMMITTER_NAME": "dev",
    "GIT_COMMITTER_EMAIL": "dev@example.com",
    "GIT_AUTHOR_DATE": "2024-01-01T00:00:00+00:00",
    "GIT_COMMITTER_DATE": "2024-01-01T00:00:00+00:00",
}


def _git(repo: Path, *args):
    subprocess.run(
        ["git", "-C", str(repo), *args], check=True, env=GIT_ENV, capture_output=True
    )


@pytest.fixture
def repo(tmp_path):
    r = tmp_path / "repo"
    r.mkdir()
    _git(r, "init", "-q")
    return r


def test_mine_simple_history(repo):
    (repo / "A.java").write_text("public class A {\n    int x;\n}\n")
    _git(repo, "add", "A.java")
    _git(repo, "commit", "-q", "-m", "add A")
    (repo / "A.java").write_text("public class A {\n    int x;\n    int y;\n}\n")
    _git(repo, "add", "A.java")
    _git(repo, "commit", "-q", "-m", "fix A")
    commits = ingest_git_history(repo)
    assert len(commits) == 2
    assert commits[0].message == "add A"
    assert commits[0].changed_files == {"A.java"}
    first = commits[0].file_changes[0]
    assert first.lines_added == 3 and first.lines_deleted == 0
    second = commits[1].file_changes[0]
    assert second.lines_added == 1
    assert commits[1].author == "dev"
    assert commits[1].timestamp == datetime(2024, 1, 1, tzinfo=timezone.utc)


def test_mine_attaches_unit_risks(repo):
    (repo / "A.java").write_text(
        "public class A {\n"
        "    public int f(int x) {\n"
        "        return x;\n"
        "    }\n"
        "}\n"
    )
    _git(repo, "add", "A.java")
    _git(repo, "commit", "-q", "-m", "add A")
    (repo / "A.java").write_text(
        "public class A {\n"
        "    public int f(int x) {\n"
        "        if (x > 0) { x += 1; }\n"
        "        return x;\n"
        "    }\n"
        "}\n"
    )
    _git(repo, "add", "A.java")
    _git(repo, "commit", "-q", "-m", "change f")
    commits = ingest_git_history(repo)
    fc = commits[1].file_changes[0]
    assert fc.unit_risks, "changed chunk inside a method should carry risk data"
    assert all(r.low_size and r.low_complexity and r.low_interfacing for r in fc.unit_risks)


def test_empty_repo_yields_no_commits(repo):
    assert ingest_git_history(repo) == []


def test_not_a_repo(tmp_path):
    with pytest.raises(RepoNotFoundError):
        ingest_git_history(tmp_path / "nope")


def test_unresolvable_ref(repo):
    (repo / "A.java").write_text("class A {}\n")
    _git(repo, "add", "A.java")
    _git(repo, "commit", "-q", "-m", "add A")
    with pytest.raises(UnresolvableRefError):
        ingest_git_history(repo, "no-such-branch")
