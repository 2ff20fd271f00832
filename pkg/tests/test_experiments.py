import math

import numpy as np
import pytest

from illposed.errors import ConfigError, ResourceError
from illposed.experiments import (
    EXPERIMENTS,
    Check,
    Table,
    embedding,
    jacobian_trend,
    run_experiment,
    scaling_exponents,
    shear_gap,
    validate,
)


class TestExponents:
    def test_reference_values(self):
        e = scaling_exponents(0.5, 4.0, math.inf, 0.5)
        assert e == {"item1": 0.0, "item2": -0.25, "item3": -0.75, "item3_sharp": -1.75}

    def test_p_equals_r_removes_lebesgue_gain(self):
        e = scaling_exponents(0.7, 3.0, 3.0, 0.2)
        assert e["item3"] == -1 and e["item2"] == pytest.approx(-0.8)


class TestRegistry:
    def test_all_ids(self):
        assert set(EXPERIMENTS) == {
            "norm-scaling", "lemfi-equivalence", "embedding", "euler-growth",
            "flow-jacobian", "shear-gap", "covering-audit",
        }

    @pytest.mark.parametrize("name", sorted(EXPERIMENTS))
    def test_defaults_validate(self, name):
        validate(name, {})
        ex = EXPERIMENTS[name]
        assert set(ex.key_params) <= set(ex.defaults)

    def test_unknown(self):
        with pytest.raises(ConfigError):
            validate("nope", {})
        with pytest.raises(ConfigError):
            validate("shear-gap", {"k": 3})

    def test_predicate_named(self):
        with pytest.raises(ConfigError, match=r"sigma > 2 \(1 - alpha\)\(1 - 1/q\)"):
            validate("lemfi-equivalence", {"alpha": (0.3,), "q": 2.0, "sigma": 0.5})
        # q = 1 makes the predicate vacuous
        validate("lemfi-equivalence", {"alpha": (0.3,), "q": 1.0, "sigma": 0.01})

    def test_budget(self):
        with pytest.raises(ResourceError):
            validate("norm-scaling", {"N": 4096}, memory_mb=1000)
        validate("norm-scaling", {"N": 4096}, memory_mb=10000)


class TestTable:
    def test_csv_repr_roundtrip(self, tmp_path):
        x = 0.1 + 0.2
        Table("t", ("a", "b", "c"), [(x, 3, "s")]).to_csv(tmp_path / "t.csv")
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines == ["a,b,c", "0.30000000000000004,3,s"]
        assert float(lines[1].split(",")[0]) == x

    def test_check_json_inf(self):
        assert Check("x", math.inf, "<= 1", False, "r").to_dict()["measured"] is None


class TestSmallRuns:
    def test_shear_gap_rows(self):
        res = shear_gap(sigma=(0.5,), epsilon=(0.1, 0.01))
        assert res.passed and len(res.tables[0].rows) == 2
        assert res.check("gap").measured == pytest.approx(2.0, abs=1e-12)

    def test_shear_gap_bump(self):
        res = shear_gap(sigma=(0.5,), epsilon=(0.01,), t=0.5, preset="bump", tol=1e-2)
        assert res.passed
        with pytest.raises(KeyError):
            res.check("witness_quotient")

    def test_embedding_small(self):
        res = embedding(fields=3, N=64, xi_max=24)
        assert res.passed
        r = res.tables[0].column("ratio")
        assert np.all(r > 0)

    def test_embedding_order(self):
        with pytest.raises(ConfigError):
            embedding(alpha1=0.8, alpha2=0.4)

    def test_jacobian_trend_two_levels(self):
        t = jacobian_trend(levels=(1, 2), n_seeds=4, n_local=16)
        v = t.column("max_jacobian")
        assert v[1] > v[0] > 1
        assert t.column("det_defect").max() < 1e-6

    def test_run_experiment_validates(self):
        with pytest.raises(ConfigError):
            run_experiment("shear-gap", {"sigma": (1.5,)})
