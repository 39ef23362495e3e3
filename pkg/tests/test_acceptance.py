"""End-to-end acceptance: the twelve criteria at full size and their stated tolerances.

Each test prints one line ``criterion N: PASS|FAIL (...)`` to the terminal.
Run alone with ``pytest tests/test_acceptance.py -v``; expect about 15 minutes.
"""

import json
import time

import pytest

from fracstrich import cli, config, suites

pytestmark = pytest.mark.slow

# wall-clock budgets in seconds
BUDGET = {1: 10, 2: 120, 3: 300, 4: 600, 5: 300, 6: 60, 7: 120, 8: 300, 9: 900, 10: 300, 11: 300, 12: 60}

# small configs for the determinism reruns
REDUCED = {
    "bessel-check": {"samples": 16},
    "transform-check": {"dimensions": [2], "sigmas": [1.0]},
    "propagate": {"a_values": [2.0], "times": [0.5]},
    "mcnorm": {},
    "maximal-check": {},
    "vdc-scan": {"a_values": [2.0], "R_exponents": [4, 11]},
    "kernel-scan": {"dimensions": [2], "per_octave": 8, "t_per_octave": 4, "stability": False},
    "tk-scan": {"dimensions": [2], "a_values": [2.0], "trials": 4},
    "strichartz-scan": {"a_values": [2.0], "s_values": [0.0], "t_max": [2.0]},
    "morawetz": {"b_values": [3.0], "t_max": 2.0},
    "extremize": {"restarts": 1, "per_restart": 6},
    "wellposed": {"refinement": False, "trials": 2},
}


def report(capsys, crit, ok, detail):
    with capsys.disabled():
        print(f"\ncriterion {crit}: {'PASS' if ok else 'FAIL'} ({detail})")


def check_suite(capsys, crit, results):
    """Fold the checks tagged ``crit`` from one or more suite results, plus the time budget."""
    checks, seconds = [], 0.0
    for res in results:
        checks += [c for c in res.checks if (c.criterion or res.criterion) == crit]
        seconds += res.seconds
    failed = [f"{c.name}={c.value!r} (bound {c.bound})" for c in checks if not c.passed]
    if seconds > BUDGET[crit]:
        failed.append(f"runtime {seconds:.0f} s > {BUDGET[crit]} s")
    detail = f"{len(checks)} checks, {seconds:.1f} s" + ("; failed: " + "; ".join(failed) if failed else "")
    report(capsys, crit, not failed, detail)
    assert checks and not failed, detail


@pytest.fixture(scope="module")
def kernel():
    return suites.kernel_suite()


def test_criterion_01_bessel_remainder(capsys):
    check_suite(capsys, 1, [suites.bessel_suite()])


def test_criterion_02_van_der_corput(capsys):
    check_suite(capsys, 2, [suites.vdc_suite()])


def test_criterion_03_kernel_diagonal(capsys, kernel):
    check_suite(capsys, 3, [kernel])


def test_criterion_04_kernel_offdiagonal(capsys, kernel):
    check_suite(capsys, 4, [kernel])


def test_criterion_05_tk_growth(capsys):
    check_suite(capsys, 5, [suites.tk_suite()])


def test_criterion_06_propagator(capsys):
    check_suite(capsys, 6, [suites.transform_suite(), suites.propagator_suite()])


def test_criterion_07_weight_identities(capsys):
    check_suite(capsys, 7, [suites.mcnorm_suite()])


def test_criterion_08_maximal_function(capsys):
    check_suite(capsys, 8, [suites.maximal_suite()])


def test_criterion_09_strichartz_sweep(capsys):
    check_suite(capsys, 9, [suites.strichartz_suite()])


def test_criterion_10_morawetz(capsys):
    check_suite(capsys, 10, [suites.morawetz_suite()])


def test_criterion_11_wellposedness(capsys):
    check_suite(capsys, 11, [suites.wellposed_suite()])


def test_criterion_12_determinism(capsys, tmp_path):
    mismatched, overhead = [], 0.0
    for sub, raw in REDUCED.items():
        cfg = config.resolve(sub, raw)
        first = cli.run(sub, cfg, tmp_path / sub / "first")
        start = time.perf_counter()
        replay, kind = config.load(tmp_path / sub / "first" / "manifest.json", sub)
        assert kind == "manifest"
        second = cli.run(sub, replay, tmp_path / sub / "second")
        overhead += time.perf_counter() - start - second.seconds
        a = (tmp_path / sub / "first" / "results.csv").read_bytes()
        b = (tmp_path / sub / "second" / "results.csv").read_bytes()
        if a != b or not a:
            mismatched.append(sub)
        assert json.loads((tmp_path / sub / "second" / "manifest.json").read_text())["config"] == \
            config.to_jsonable(cfg)
        del first
    ok = not mismatched and overhead < BUDGET[12]
    detail = f"{len(REDUCED)} subcommands, replay overhead {overhead:.2f} s" + \
        (f"; results.csv differs for {', '.join(mismatched)}" if mismatched else "")
    report(capsys, 12, ok, detail)
    assert ok, detail
