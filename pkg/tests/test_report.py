import math

import numpy as np
import pytest

from kirchhoff.report import (
    FAIL,
    INCONCLUSIVE,
    PASS,
    Check,
    KernelSummary,
    VerificationReport,
    checks_csv,
    dumps,
)


def sample_report():
    rep = VerificationReport(kind="kernel", config={"a": 1.0, "n": 256})
    rep.checks += [Check.below("x", 1e-12, 1e-10), Check.equal("dim", 4, 4),
                   Check.above("align", 0.1 + 0.2, 0.25)]
    rep.kernel = KernelSummary(counts={0: 1, 1: 1, 2: 0}, dim=4, alignments={0: 1.0, 1: None},
                               gap=95.069617421111559, sector_gaps={0: 95.1, 1: 95.0, 2: None},
                               tol_kernel=6.48e-9, eigenvalues={0: [-334.7, 1e-11]},
                               negative_index={0: 1}, ambiguous={})
    rep.convergence.append({"n": 96, "gap": 1 / 3})
    rep.data["nested"] = {"values": [math.pi, -0.0, 1e-300]}
    return rep


def test_round_trip_exact():
    rep = sample_report()
    back = VerificationReport.from_json(rep.to_json())
    assert back.to_json() == rep.to_json()
    assert back.kernel == rep.kernel
    assert back.data["nested"]["values"][0] == math.pi
    assert back.convergence[0]["gap"] == 1 / 3


def test_status_aggregation():
    rep = VerificationReport(kind="x")
    assert rep.status == PASS
    rep.checks.append(Check.inconclusive("amb", 1e-9, 1e-10))
    assert rep.status == INCONCLUSIVE
    rep.checks.append(Check.below("bad", 1.0, 0.5))
    assert rep.status == FAIL


@pytest.mark.parametrize("value", [math.nan, math.inf, None])
def test_non_finite_values_fail(value):
    assert Check.below("v", value, 1.0).status == FAIL
    assert Check.above("v", value, 0.0).status == FAIL
    assert Check.under("v", value, 1.0).status == FAIL


def test_check_rules():
    assert Check.below("v", -0.5, 1.0).passed
    assert not Check.under("v", 1.0, 1.0).passed
    assert Check.under("v", -5.0, 1.0).passed
    assert not Check.equal("v", 3, 4).passed
    assert isinstance(Check.equal("v", np.int64(3), 3).value, int)


def test_stored_status_is_validated():
    d = sample_report().to_dict()
    d["status"] = FAIL
    with pytest.raises(ValueError):
        VerificationReport.from_dict(d)


def test_check_lookup():
    rep = sample_report()
    assert rep.check("dim").value == 4
    with pytest.raises(KeyError):
        rep.check("missing")


def test_dumps_seventeen_digits():
    assert dumps(0.1) == "0.10000000000000001"
    assert dumps({"a": [1, True, None]}) == '{\n  "a": [\n    1,\n    true,\n    null\n  ]\n}'
    assert dumps(np.float64(2.5)) == "2.5"
    with pytest.raises(ValueError):
        dumps(math.nan)


def test_checks_csv():
    text = checks_csv(sample_report())
    lines = text.splitlines()
    assert lines[0] == "name,value,tolerance,rule,status"
    assert lines[1].startswith("x,9.9999999999999998e-13,")
    assert len(lines) == 4


def test_extend_merges():
    a = VerificationReport(kind="a", checks=[Check.below("p", 0.0, 1.0)])
    b = sample_report()
    a.extend(b)
    assert len(a.checks) == 4 and a.kernel is b.kernel


def test_integral_floats_stay_floats():
    assert dumps(2.0) == "2.0"
    assert dumps(-0.0) == "-0.0"
    assert dumps(1e300) == "1.0000000000000001e+300"
    rep = VerificationReport(kind="x", data={"v": 2.0})
    assert isinstance(VerificationReport.from_json(rep.to_json()).data["v"], float)


def test_undecided_count():
    assert Check.count("n", 0, 1, undecided=True).status == INCONCLUSIVE
    assert Check.count("n", 2, 1, undecided=True).status == FAIL
    assert Check.count("n", 1, 1, undecided=False).status == PASS
