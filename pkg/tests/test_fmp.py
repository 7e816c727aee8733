"""Membership decisions, witness extraction, generators, and batches."""

import io
from itertools import product

import numpy as np
import pytest

import fmpsat as F
from fmpsat.errors import ClassifierError
from fmpsat.fmp import (
    BatchQuery,
    FmpQuery,
    batch_run,
    decide_membership,
    generate_random_classifier,
    generate_random_obdd,
    obdd_to_shannon_sdd,
    random_instance,
)


def test_running_example_all_four_routes(ella_sdd_clf, ella_obdd_clf, ella_instance):
    expected = {1: True, 2: False, 3: True, 4: False}
    for clf in (ella_sdd_clf, ella_obdd_clf):
        for method in ("one-step", "two-step"):
            for target, want in expected.items():
                outcome = decide_membership(
                    FmpQuery(clf, ella_instance, target, method)
                )
                assert outcome.membership == want
                if want:
                    assert outcome.witness == {1, 3}


def test_xpg_route(ella_xpg):
    clf = F.XpgClassifier(ella_xpg)
    yes = decide_membership(FmpQuery(clf, None, 3, "two-step"))
    assert yes.membership and yes.witness == {1, 3}
    no = decide_membership(FmpQuery(clf, None, 2, "one-step"))
    assert not no.membership


def test_two_step_witness_contains_target(ella_obdd_clf, ella_instance):
    outcome = decide_membership(FmpQuery(ella_obdd_clf, ella_instance, 1, "two-step"))
    assert outcome.membership
    assert 1 in outcome.witness
    assert outcome.witness == {1, 3}


def test_pre_negation_route(ella_sdd_clf):
    # an accepted applicant: P=1, Y=1 makes the conjunction hold
    inst = F.Instance((1, 1, 0, 0), 1)
    axps = F.enumerate_axps_bruteforce(ella_sdd_clf, inst)
    members = {i for a in axps for i in a}
    for t in range(1, 5):
        outcome = decide_membership(FmpQuery(ella_sdd_clf, inst, t, "two-step"))
        assert outcome.membership == (t in members)
        assert outcome.pre_negated


def test_literal_root_sdd():
    # the whole classifier is the single literal x1
    vtree = F.parse_vtree("L 0 1\n")
    sdd = F.parse_sdd("L 0 0 1\n", vtree)
    clf = F.SddClassifier(sdd)
    inst = F.Instance((0,), 0)
    for method in ("one-step", "two-step"):
        outcome = decide_membership(FmpQuery(clf, inst, 1, method))
        assert outcome.membership and outcome.witness == {1}
    # the accepted point goes through the negated diagram
    accepted = F.Instance((1,), 1)
    outcome = decide_membership(FmpQuery(clf, accepted, 1, "two-step"))
    assert outcome.membership and outcome.pre_negated


def test_mismatched_instance_rejected(ella_sdd_clf):
    with pytest.raises(ClassifierError, match="predicts"):
        decide_membership(FmpQuery(ella_sdd_clf, F.Instance((0, 1, 0, 1), 1), 1))


def test_unknown_method_rejected(ella_sdd_clf, ella_instance):
    with pytest.raises(ClassifierError, match="unknown method"):
        decide_membership(FmpQuery(ella_sdd_clf, ella_instance, 1, "three-step"))


# -------------------------------------------------------------- generators

def test_generator_deterministic():
    a = generate_random_obdd(6, 20, seed=7)
    b = generate_random_obdd(6, 20, seed=7)
    assert F.serialize_obdd(a) == F.serialize_obdd(b)
    sa = obdd_to_shannon_sdd(a)
    sb = obdd_to_shannon_sdd(b)
    assert F.serialize_sdd(sa) == F.serialize_sdd(sb)


def test_generator_nonconstant_and_reachable():
    for seed in range(20):
        obdd = generate_random_obdd(5, 15, seed=seed)
        labels = obdd.reachable_labels()
        assert labels == {0, 1}


def test_generator_budget_too_small():
    with pytest.raises(ClassifierError, match="budget"):
        generate_random_obdd(4, 2, seed=0)


def test_shannon_twin_agrees_everywhere():
    for seed in (1, 2, 3):
        m = 4 + seed
        obdd = generate_random_obdd(m, 18, seed=seed)
        sdd = obdd_to_shannon_sdd(obdd)
        for point in product((0, 1), repeat=m):
            assert int(F.evaluate(sdd, point)) == obdd.predict(point)


def test_shannon_twin_partition_property():
    # primes of every decision node are a literal and its negation, so
    # exactly one holds under any assignment; spot-check semantically
    obdd = generate_random_obdd(6, 20, seed=11)
    sdd = obdd_to_shannon_sdd(obdd)
    from fmpsat.sdd import SddDecision, SddLiteral

    for node in sdd.nodes:
        if isinstance(node, SddDecision):
            primes = [sdd.nodes[p] for p, _ in node.elements]
            assert all(isinstance(p, SddLiteral) for p in primes)
            assert {p.positive for p in primes} == {True, False}
            assert len({p.var for p in primes}) == 1


def test_sdd_and_xpg_routes_agree_from_same_obdd():
    rng = np.random.default_rng(31)
    for trial in range(6):
        m = int(rng.integers(3, 8))
        obdd = generate_random_obdd(m, 16, seed=60 + trial)
        oclf = F.ObddClassifier(obdd)
        sclf = F.SddClassifier(obdd_to_shannon_sdd(obdd))
        inst = random_instance(oclf, rng)
        for t in range(1, m + 1):
            a = decide_membership(FmpQuery(oclf, inst, t, "two-step")).membership
            b = decide_membership(FmpQuery(sclf, inst, t, "two-step")).membership
            assert a == b


# ------------------------------------------------------------------ batch

def _small_batch(method_list, seed=5, queries=10):
    rng = np.random.default_rng(seed)
    clf = generate_random_classifier("obdd", 6, 20, seed=seed)
    picks = [
        (random_instance(clf, rng), int(rng.integers(1, 7))) for _ in range(queries)
    ]
    out = []
    for method in method_list:
        for inst, t in picks:
            out.append(BatchQuery("toy", FmpQuery(clf, inst, t, method)))
    return out


def test_batch_rows_and_header():
    sink = io.StringIO()
    rows = batch_run(_small_batch(["one-step", "two-step"]), None, sink)
    text = sink.getvalue().splitlines()
    assert text[0] == "name,m,nodes,method,yes_pct,avg_vars,avg_cls,max_s,avg_s,timeouts"
    assert len(rows) == 2
    one, two = rows
    assert one[3] == "one-step" and two[3] == "two-step"
    # method agreement shows up as identical yes percentages
    assert one[4] == two[4]
    assert int(one[9]) == 0 and int(two[9]) == 0


def test_batch_no_timeouts_on_tiny_inputs():
    sink = io.StringIO()
    rows = batch_run(_small_batch(["two-step"], queries=100), 30.0, sink)
    assert rows[0][9] == "0"


def test_batch_timeout_handling():
    # a zero budget times out every query but the batch still completes
    sink = io.StringIO()
    rows = batch_run(_small_batch(["two-step"], queries=3), 0.0, sink)
    assert rows[0][9] == "3"


def test_batch_parallel_matches_serial():
    queries = _small_batch(["one-step", "two-step"], seed=9, queries=12)
    a, b = io.StringIO(), io.StringIO()
    rows_serial = batch_run(queries, None, a, workers=1)
    rows_parallel = batch_run(queries, None, b, workers=4)
    strip = lambda rows: [r[:5] + [r[9]] for r in rows]  # drop timing columns
    assert strip(rows_serial) == strip(rows_parallel)


def test_batch_requires_queries():
    with pytest.raises(ClassifierError, match="at least one"):
        batch_run([], None, io.StringIO())
