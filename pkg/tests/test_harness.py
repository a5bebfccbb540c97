import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from esls import reference_config
from esls.config import ConfigError
from esls.harness import (ConvergenceCriterion, McSummary, ModeSummary, box_stats,
                          convergence_step, parse_modes, run_batch)

CRIT = ConvergenceCriterion()


def test_convergence_examples():
    assert convergence_step([1.0] * 100, CRIT) == 30
    assert convergence_step([3.0] * 100, CRIT) is None
    e = [5.0] * 200
    e[99:128] = [1.0] * 29  # steps 100..128
    assert convergence_step(e, CRIT) is None
    e[128] = 1.0  # now 30 long: steps 100..129
    assert convergence_step(e, CRIT) == 129
    assert convergence_step([2.0] * 30, CRIT) == 30  # threshold inclusive


def test_convergence_respects_max_steps():
    assert convergence_step([1.0] * 40, ConvergenceCriterion(2.0, 30, 29)) is None


def test_criterion_validation():
    for kw in ({"threshold": 0.0}, {"window": 0}, {"max_steps": 0}):
        with pytest.raises(ConfigError):
            ConvergenceCriterion(**kw)


@given(st.lists(st.floats(0, 5), max_size=300), st.floats(0.1, 4), st.floats(0, 2),
       st.integers(1, 40), st.integers(0, 39))
def test_criterion_monotone(errs, thr, extra, window, shrink):
    base = convergence_step(errs, ConvergenceCriterion(thr, window))
    looser = convergence_step(errs, ConvergenceCriterion(thr + extra, window))
    shorter = convergence_step(errs, ConvergenceCriterion(thr, max(1, window - shrink)))
    if base is not None:
        assert looser is not None and looser <= base
        assert shorter is not None and shorter <= base


def test_box_stats_tukey():
    v = list(range(1, 11)) + [100]
    b = box_stats(v)
    q1, q3 = np.percentile(v, [25, 75])
    assert (b.q1, b.q3) == (q1, q3)
    assert b.outliers == (100.0,)
    assert (b.whisker_lo, b.whisker_hi) == (1.0, 10.0)
    assert box_stats([]) is None


def test_mode_summary_statistics():
    m = ModeSummary.from_steps("ls", [100, None, 300, 200])
    assert m.runs == 4 and m.non_converged == 1
    assert m.mean == 200.0
    assert m.std == pytest.approx(100.0)
    assert m.variance == pytest.approx(1e4)
    single = ModeSummary.from_steps("es", [42])
    assert (single.mean, single.std, single.box.median) == (42.0, 0.0, 42.0)
    none = ModeSummary.from_steps("es", [None, None])
    assert none.mean is None and none.box is None and none.n_outliers == 0


def test_parse_modes():
    assert parse_modes("es,ls,esls") == ("es", "ls", "esls")
    assert parse_modes("combined,es,es") == ("esls", "es")
    with pytest.raises(ConfigError):
        parse_modes("")


def test_run_batch_rejects_empty():
    with pytest.raises(ConfigError):
        run_batch(reference_config(), 0)


QUICK = ConvergenceCriterion(threshold=30.0, window=5, max_steps=150)


def test_single_run_batch_matches_direct():
    from esls import run
    s = run_batch(reference_config(), 1, base_seed=5, modes="esls", criterion=QUICK)
    tr = run(reference_config(seed=5, max_research_steps=150))
    assert s["esls"].steps == (convergence_step(tr.err_norm, QUICK),)
    if s["esls"].steps[0] is not None:
        assert s["esls"].mean == s["esls"].steps[0]


def test_batch_seed_stable_and_parallel_invariant():
    a = run_batch(reference_config(), 4, base_seed=11, modes="es,esls", criterion=QUICK)
    b = run_batch(reference_config(), 4, base_seed=11, modes="es,esls", criterion=QUICK)
    c = run_batch(reference_config(), 4, base_seed=11, modes="es,esls", criterion=QUICK, jobs=2)
    assert a == b == c
    assert McSummary.from_dict(a.to_dict()) == a


def test_summary_round_trip_dict():
    s = McSummary(3, 2, CRIT, {"es": ModeSummary.from_steps("es", [5, None])})
    assert McSummary.from_dict(s.to_dict()) == s
    assert math.isclose(s["es"].mean, 5.0)
