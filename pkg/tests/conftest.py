from pathlib import Path

import pytest

import fmpsat as F

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session", autouse=True)
def warm_solver():
    # compile (or load from cache) the hot kernels once, so individual
    # tests measure solving rather than JIT startup
    from fmpsat.sat import warm_up
    from fmpsat.xpg import XpGraph, XpgNonTerminal, XpgTerminal, evaluate_sigma

    warm_up()
    tiny = XpGraph(
        [XpgNonTerminal(1), XpgTerminal(1), XpgTerminal(0)],
        [(0, 1, 1), (0, 2, 0)],
        0,
        1,
    )
    evaluate_sigma(tiny, [1])


@pytest.fixture(scope="session")
def ella_vtree():
    return F.parse_vtree((DATA / "ella.vtree").read_text())


@pytest.fixture(scope="session")
def ella_sdd(ella_vtree):
    return F.parse_sdd((DATA / "ella.sdd").read_text(), ella_vtree)


@pytest.fixture(scope="session")
def ella_obdd():
    return F.parse_obdd((DATA / "ella.obdd").read_text())


@pytest.fixture(scope="session")
def ella_instance():
    return F.parse_instance((DATA / "ella.inst").read_text())


@pytest.fixture(scope="session")
def ella_xpg(ella_obdd, ella_instance):
    return F.build_xpg_from_obdd(ella_obdd, ella_instance)


@pytest.fixture(scope="session")
def ella_sdd_clf(ella_sdd):
    return F.SddClassifier(ella_sdd)


@pytest.fixture(scope="session")
def ella_obdd_clf(ella_obdd):
    return F.ObddClassifier(ella_obdd)
