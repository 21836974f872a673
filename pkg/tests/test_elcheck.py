"""Stationarity residual construction and randomized certification."""

import json
from fractions import Fraction

import pytest

from qpotlab.elcheck import (
    FAILS,
    PASSES,
    build_el_residual,
    certify,
    el_residual_terms,
)
from qpotlab.expr import (
    Const,
    Jet,
    JetPoint,
    JetVariable,
    Sym,
    ZERO,
    canonical,
    evaluate,
    make_prod,
    make_sum,
    parse_q_expression,
    to_text,
)

R_x = Jet(JetVariable((0,)))
R_xx = Jet(JetVariable((0, 0)))


class TestResidualConstruction:
    def test_bohmian_flux_terms_cancel(self):
        # For Q2 the two contributions are -A R_xx and +D_x D_x (A R).
        q = parse_q_expression("A2 * lap(R) / R", 1)
        terms = el_residual_terms(q, 1)
        assert [v.name for v, _ in terms] == ["R", "R_xx"]
        t_r = canonical(terms[0][1])
        t_rxx = canonical(terms[1][1])
        assert canonical(make_sum((t_r, t_rxx))) == ZERO

    def test_family_residuals_vanish_symbolically(self):
        for text in (
            "A0",
            "A2 * lap(R) / R",
            "A4 * lap(lap(R)) / R",
            "A6 * lap(lap(lap(R))) / R",
        ):
            assert build_el_residual(parse_q_expression(text, 1), 1) == ZERO, text

    def test_gradient_counterexample_residual(self):
        # Q = C R_x / R  ->  residual -2 C R_x
        q = parse_q_expression("C * dx(R) / R", 1)
        res = build_el_residual(q, 1)
        assert res == make_prod((Const(Fraction(-2)), Sym("C"), R_x))

    def test_fisher_counterexample_residual(self):
        # Q = C R_x^2 / R^2  ->  residual -2 C R_xx - 2 C R_x^2 / R
        q = parse_q_expression("C * dx(R)^2 / R^2", 1)
        res = build_el_residual(q, 1)
        expected = parse_q_expression("-2 * C * lap(R) - 2 * C * dx(R)^2 / R", 1)
        assert res == expected

    def test_odd_order_sign(self):
        # single odd-order variable contributes with a minus sign
        q = parse_q_expression("C * dx(R)", 1)
        terms = dict(
            (v.name, t) for v, t in el_residual_terms(q, 1)
        )
        # -D_x(R^2 C) = -2 C R R_x
        expected = parse_q_expression("-2 * C * R * dx(R)", 1)
        assert canonical(terms["R_x"]) == expected

    def test_dimension_guard(self):
        q = parse_q_expression("A2 * lap(R) / R", 2)
        with pytest.raises(ValueError, match="beyond dimension"):
            el_residual_terms(q, 1)


class TestCertify:
    def test_family_passes_in_all_dimensions(self):
        for dim in (1, 2, 3):
            q = parse_q_expression("A2 * lap(R) / R", dim)
            report = certify(q, dim, trials=40, seed=7)
            assert report.verdict == PASSES
            assert report.max_abs_residual <= 1e-10

    def test_counterexamples_fail_loudly(self):
        for text in ("C * dx(R) / R", "C * dx(R)^2 / R^2"):
            q = parse_q_expression(text, 1)
            report = certify(q, 1, trials=40, seed=7)
            assert report.verdict == FAILS, text
            assert report.max_abs_residual > 1e-3

    def test_report_is_deterministic_in_seed(self):
        q = parse_q_expression("C * dx(R)^2 / R^2", 1)
        r1 = certify(q, 1, trials=30, seed=42)
        r2 = certify(q, 1, trials=30, seed=42)
        assert r1 == r2
        r3 = certify(q, 1, trials=30, seed=43)
        assert r3.max_abs_residual != r1.max_abs_residual

    def test_resampling_reported(self):
        # Zero-offset profiles occasionally wander below |R| = 0.1; the
        # polynomial family triggers redraws which must be counted.
        q = parse_q_expression("A2 * lap(R) / R", 1)
        report = certify(q, 1, trials=200, seed=0)
        assert report.resamples >= 0
        assert report.samples_used == 200

    def test_report_serialization(self):
        q = parse_q_expression("A2 * lap(R) / R", 1)
        report = certify(q, 1, trials=20, seed=1)
        payload = json.loads(report.to_json())
        assert payload["verdict"] == PASSES
        assert payload["candidate"] == to_text(canonical(q))
        assert payload["samples_used"] == 20
        assert payload["seed"] == 1

    def test_invalid_arguments(self):
        q = parse_q_expression("A2 * lap(R) / R", 1)
        with pytest.raises(ValueError):
            certify(q, 1, trials=0)
        with pytest.raises(ValueError):
            certify(q, 1, tol=0.0)

    def test_terms_evaluate_consistently(self):
        # Sum of per-index terms equals the assembled residual numerically.
        q = parse_q_expression("C * dx(R)^2 / R^2", 1)
        terms = el_residual_terms(q, 1)
        residual = build_el_residual(q, 1)
        point = JetPoint(
            {
                JetVariable(): 1.25,
                JetVariable((0,)): -0.75,
                JetVariable((0, 0)): 0.5,
                JetVariable((0, 0, 0)): 0.125,
            }
        )
        consts = {"C": 3.0}
        total = sum(evaluate(t, point, consts) for _, t in terms)
        assert total == pytest.approx(evaluate(residual, point, consts), rel=1e-12)
