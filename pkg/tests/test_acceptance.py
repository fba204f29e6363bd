"""The fifteen acceptance criteria at their stated tolerances and sample sizes.

The whole default suite runs once (about 25 minutes on one core), and the
determinism criterion reruns it at 8 threads. Each test then reports one
criterion and prints a PASS or FAIL line.

Criteria 1, 3, 4 and 9 contain a stated target that an independent
computation contradicts. Those sub-cases fail, and the tests are marked as
strict expected failures. The report diagnostics carry the corrected values.
The ledger explains each one.
"""
import pytest

from rmtfluct import cli

KNOWN = {
    1: "the printed (z.5) constant misses B_2 by (2/(pi^2 beta)) log pi; the log(pi beta) form agrees",
    3: "Var sum cos 2x is sum m_l f_l f_-l = 1, not 2; MC agrees with 1",
    4: "stated targets are twice the weight formula (COE 2, CSE 1/2, beta = 3 gives 2/3); MC agrees with those",
    9: "the f = x^2 limit is 0, the exact value at N = 400 is 1/(8N); MC agrees with 1/(8N)",
}


@pytest.fixture(scope="module")
def report():
    return cli.verify(cli.default_suite(), threads=1)


def _failed_leaves(r):
    subs = r["diagnostics"].get("cases") if r["mode"] == "group" else None
    if not subs:
        return [] if r["passed"] else [r["id"]]
    return [i for s in subs for i in _failed_leaves(s)]


def _params():
    for k in range(1, 16):
        marks = [pytest.mark.slow]
        if k in KNOWN:
            marks.append(pytest.mark.xfail(strict=True, reason=KNOWN[k]))
        yield pytest.param(k, marks=marks, id=f"criterion_{k:02d}")


@pytest.mark.parametrize("k", list(_params()))
def test_criterion(report, k, capsys):
    r = next(x for x in report["results"] if x["id"] == f"criterion_{k}")
    failed = _failed_leaves(r)
    with capsys.disabled():
        extra = f" (failing: {', '.join(failed)})" if failed else ""
        print(f"\n{'PASS' if r['passed'] else 'FAIL'} criterion {k}: {r['label']}{extra}")
    assert r["passed"], failed
