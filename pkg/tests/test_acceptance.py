"""The nine acceptance criteria, one test each.

Criteria 1-8 run once per session and their report is written to a
temporary file; criterion 9 reruns the whole suite in a fresh interpreter and
compares the two report files byte for byte. A pass/fail line per criterion
is printed in the terminal summary.
"""
import pathlib
import subprocess
import sys

import pytest

import acceptance_suite as suite
import conftest

pytestmark = pytest.mark.acceptance

SEED = 0


@pytest.fixture(scope="module")
def first_run(tmp_path_factory):
    results = {}

    def get(n):
        if n not in results:
            results[n] = suite.run_criterion(n, SEED)
            conftest.ACCEPTANCE_LINES.append(results[n].line())
        return results[n]

    return get

@pytest.mark.parametrize("n", range(1, 9))
def test_criterion(first_run, n):
    res = first_run(n)
    print(res.line())
    assert res.passed, res.summary


def test_criterion_9_determinism(first_run, tmp_path):
    results = [first_run(n) for n in range(1, 9)]
    a = tmp_path / "report_a.json"
    b = tmp_path / "report_b.json"
    suite.write_report(results, SEED, str(a))
    script = pathlib.Path(suite.__file__)
    proc = subprocess.run([sys.executable, str(script), "--seed", str(SEED), "--out", str(b)],
                          capture_output=True, text=True)
    same = b.exists() and a.read_bytes() == b.read_bytes()
    line = (f"criterion 9 [{'PASS' if same else 'FAIL'}] determinism: "
            f"two full suite runs with seed {SEED} give "
            f"{'byte-identical' if same else 'DIFFERENT'} reports ({a.stat().st_size} bytes)")
    conftest.ACCEPTANCE_LINES.append(line)
    print(line)
    assert b.exists(), proc.stderr
    assert same
