import math

import numpy as np
import pytest

from ldpbandit.mechanisms import Mechanism

_ACCEPTANCE: dict[str, list[tuple[bool, str]]] = {}


def record_acceptance(criterion: str, passed: bool, detail: str = "") -> None:
    _ACCEPTANCE.setdefault(criterion, []).append((bool(passed), detail))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_ACCEPTANCE, key=lambda c: int(c.split()[0])):
        results = _ACCEPTANCE[criterion]
        ok = all(p for p, _ in results)
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}")
        for passed, detail in results:
            if not passed or detail:
                terminalreporter.write_line(f"    {'ok  ' if passed else 'FAIL'} {detail}")


EPSILONS = (0.1, 0.5, 1.0, 2.0, 5.0)


def mechanism_grid(eps: float) -> list[Mechanism]:
    """linear, quadratic at b in {0, e^eps-1, 2(e^eps-1)}, exponential."""
    return [
        Mechanism("linear", eps),
        Mechanism("quadratic", eps, 0.0),
        Mechanism("quadratic", eps, math.expm1(eps)),
        Mechanism("quadratic", eps, 2.0 * math.expm1(eps)),
        Mechanism("exponential", eps),
    ]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
