"""Acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line (visible even without
``-s``). Run ``python3 tests/test_acceptance.py`` to get just the lines.
Exploratory checks are printed but never decide the verdict.
"""

import functools
import sys

import pytest

from pubgood.repro import run_experiment


@functools.lru_cache(maxsize=None)
def experiment(name):
    return run_experiment(name)


def verdict(number, title, exp, labels=None):
    checks = [c for c in exp.checks if labels is None or c.label in labels or c.label == "runtime"]
    required = [c for c in checks if not c.exploratory]
    ok = all(c.passed for c in required)
    detail = "; ".join(f"{c.label}: {c.detail or ('ok' if c.passed else 'failed')}"
                       + (" [exploratory " + ("pass" if c.passed else "FAIL") + "]"
                          if c.exploratory else "")
                       for c in checks)
    return ok, f"{'PASS' if ok else 'FAIL'} criterion {number} ({title}): {detail}"


CRITERIA = [
    (1, "clique approximation", "clique-approx", None),
    (2, "clique worst equilibrium", "clique-worst", None),
    (3, "Myerson reserve failure", "myerson-gap", None),
    (4, "pentagon gap", "pentagon-gap", None),
    (5, "bipartite free riding", "bipartite", None),
    (6, "uniform price 1/2 on general graphs", "uniform-general", {"WC(1/2) >= (e/4) max_p WC(p)"}),
    (7, "sandwich bounds", "uniform-general", {"sandwich bounds hold"}),
    (8, "hardness gadget", "hardness", None),
    (9, "sequential clique", "seq-clique", None),
    (10, "Monte Carlo and hipster game", "montecarlo", None),
    (11, "prophet price", "prophet", None),
]


@pytest.mark.parametrize("number,title,name,labels", CRITERIA,
                         ids=[f"{c[0]:02d}-{c[2]}" for c in CRITERIA])
def test_criterion(request, number, title, name, labels):
    exp = experiment(name)
    ok, line = verdict(number, title, exp, labels)
    capman = request.config.pluginmanager.getplugin("capturemanager")
    with capman.global_and_fixture_disabled():
        print("\n" + line)
    assert ok, line


if __name__ == "__main__":
    failed = 0
    for number, title, name, labels in CRITERIA:
        ok, line = verdict(number, title, experiment(name), labels)
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
