import pytest

from sbcsim.kernel import ScenarioScript, run_scenario

ACCEPTANCE = {}


def record(n, ok, detail=""):
    ACCEPTANCE[n] = (ok, detail)
    print(f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}")
    return ok


@pytest.fixture
def accept():
    return record


def script(stack, acts=(), n=4, seed=1, corruptions=(), adversary=(), **params):
    return ScenarioScript.from_dict({
        "seed": seed, "n": n, "stack": stack, "params": params,
        "activations": [{"round": r, "party": p, "input": op} for r, p, op in acts],
        "corruptions": list(corruptions), "adversary": list(adversary),
    })


def outputs(sim_or_trace):
    trace = getattr(sim_or_trace, "trace", sim_or_trace)
    return [(ev.round, ev.actor["pid"], ev.payload) for ev in trace if ev.label == "output"]


def run(stack, acts=(), **kw):
    return run_scenario(script(stack, acts, **kw))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
