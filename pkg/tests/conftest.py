from collections import defaultdict

import pytest

CRITERIA = {
    1: "moment combinations of the 16 protocol-1 settings",
    2: "single-plate states reproduce the predicted vectors (F >= 0.99)",
    3: "fidelity arithmetic on listed vector pairs (+-0.005)",
    4: "dichroic transform swaps Bell pairs and |VV> -> |HV>",
    5: "P4 not invariant; trace and local purity invariant",
    6: "tomography roundtrip, noise level and count-budget ordering",
    7: "separability defect vs reduced-density eigenvalues",
    8: "MUB orthonormality and unbiasedness",
    9: "deterministic discrimination and circular-basis diagonal",
    10: "tilt scan shape and coincidence maximum",
}

_results = defaultdict(list)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        _results[marker.args[0]].append((item.name, rep.passed, detail))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        rows = _results.get(n)
        if not rows:
            tr.write_line(f"criterion {n:2d}  NOT RUN  {CRITERIA[n]}")
            continue
        failed = [r for r in rows if not r[1]]
        status = "PASS" if not failed else "FAIL"
        note = f"{len(rows) - len(failed)}/{len(rows)} checks"
        if failed:
            note += "; failing: " + ", ".join(f"{name} ({d})" if d else name for name, _, d in failed)
        tr.write_line(f"criterion {n:2d}  {status}  {CRITERIA[n]}  [{note}]")
