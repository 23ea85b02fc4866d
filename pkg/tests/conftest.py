import pytest

from formation.sim import compare_variants, demo_scenario


@pytest.fixture(scope="session")
def demo_comparison():
    """All four variants on the demo scenario at the default step."""
    return compare_variants(demo_scenario(), parallel=True)


@pytest.fixture(scope="session")
def demo_comparison_half_step():
    """Same scenario at half the step, logged on the same 0.01 s grid."""
    base = demo_scenario()
    return compare_variants(demo_scenario(dt=base.dt / 2, decimation=2 * base.decimation),
                            parallel=True)


ACCEPTANCE = pytest.StashKey[dict]()


@pytest.fixture(scope="session")
def acceptance_log(request):
    """criterion number -> (passed, detail), echoed in the terminal summary."""
    return request.config.stash.setdefault(ACCEPTANCE, {})


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        passed, detail = results[number]
        terminalreporter.write_line(
            f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
