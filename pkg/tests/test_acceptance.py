"""Acceptance criteria at their stated tolerances.

The whole suite shares one run (the saturation series feeds several
criteria).  Each criterion prints a single PASS/FAIL line.
"""

import pytest

from wgmcqed.acceptance import CRITERIA, run_acceptance


@pytest.fixture(scope="module")
def results(request):
    # write past output capture so the log shows every criterion line
    term = request.config.pluginmanager.getplugin("terminalreporter")
    echo = (lambda s: term.write_line(s)) if term is not None else print
    if term is not None:
        term.write_line("")
    out = run_acceptance(echo=echo)
    return {r.number: r for r in out}


@pytest.mark.slow
@pytest.mark.parametrize("number", sorted(CRITERIA))
def test_criterion(results, number):
    res = results[number]
    assert res.passed, res.line()
