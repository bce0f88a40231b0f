import random

import pytest

from feasikit import theory
from feasikit.numerics import Point2, SingularMatrixError, dist, inner, norm
from feasikit.sets import CurveGraph, XAxis
from feasikit.solvers import DrOperator, dr_step, lt_step
from feasikit.theory import (
    CurveTaylor,
    DegenerateDenominatorError,
    ProbeGrid,
    ZeroDerivativeError,
    gamma_system,
    get_curve,
    h_coeff,
    linear_rate,
    lt_closed_form,
    lyapunov_grad,
    nu,
    probe_denominator_limit,
    probe_one_minus_h,
    probe_ratio,
    probe_zeta_limit,
    t_inverse,
    zeta_terms,
)


def graph_operator(ctx, curve):
    return DrOperator(first=XAxis(), second=CurveGraph(curve))


class TestCurves:
    def test_registry(self, ctx):
        for ident, a in (("linear:3", 3), ("quad", 1), ("cubic", 2), ("sin-shift", 2)):
            curve = get_curve(ident, ctx)
            assert curve.ident == ident
            assert abs(curve.a - a) <= ctx.pow10(-110)
            assert curve.f(ctx.mp.zero) == 0

    def test_unknown(self, ctx):
        with pytest.raises(ValueError):
            get_curve("septic", ctx)
        with pytest.raises(ValueError):
            get_curve("linear:0", ctx)

    def test_taylor_tails(self, ctx):
        tol = ctx.pow10(-100)
        for ident in ("quad", "cubic", "sin-shift"):
            curve = get_curve(ident, ctx)
            taylor = CurveTaylor.of(curve, ctx)
            for k in range(1, 11):
                for sign in (1, -1):
                    t = sign * ctx.pow10(-k)
                    assert abs(taylor.b(t) * t * t + curve.a * t - curve.f(t)) <= tol
                    assert abs(taylor.c(t) * t + curve.a - curve.df(t)) <= tol
            # the removable singularity comes from the second derivative
            assert taylor.b(ctx.mp.zero) == curve.ddf(ctx.mp.zero) / 2
            assert taylor.c(ctx.mp.zero) == curve.ddf(ctx.mp.zero)

    def test_taylor_quad_values(self, ctx):
        taylor = CurveTaylor.of(get_curve("quad", ctx), ctx)
        assert taylor.b(ctx.mp.zero) == 1
        assert taylor.c(ctx.mp.zero) == 2


class TestClosedForms:
    def test_t_inverse_linear(self, ctx):
        curve = get_curve("linear:1", ctx)
        w = Point2.of(ctx, "0.2", "0.7")
        assert t_inverse(w, curve) == Point2.of(ctx, "0.9", "0.5")
        assert t_inverse(Point2.of(ctx, 0, 0), curve) == Point2.of(ctx, 0, 0)

    def test_t_inverse_quad(self, ctx):
        got = t_inverse(Point2.of(ctx, "0.1", "0.2"), get_curve("quad", ctx))
        assert abs(got.x - ctx.mpf("0.34")) <= ctx.pow10(-110)
        assert abs(got.z - ctx.mpf("0.09")) <= ctx.pow10(-110)

    def test_t_inverse_is_local_inverse(self, ctx):
        # two-sided: T(T^-1 w) = w and T^-1(T y) = y near the origin
        for ident in ("quad", "cubic"):
            curve = get_curve(ident, ctx)
            t = graph_operator(ctx, curve)
            rng = random.Random(61)
            for _ in range(10):
                w = Point2.of(ctx, rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3))
                back = dr_step(t, t_inverse(w, curve), ctx)
                assert dist(back, w, ctx) <= ctx.pow10(-100)
                y = Point2.of(ctx, rng.uniform(-1e-3, 1e-3), rng.uniform(-1e-3, 1e-3))
                again = t_inverse(dr_step(t, y, ctx), curve)
                assert dist(again, y, ctx) <= ctx.pow10(-100)

    def test_lyapunov_grad(self, ctx):
        assert lyapunov_grad(Point2.of(ctx, "0.4", "0.2"), get_curve("linear:1", ctx)) == Point2.of(ctx, "0.4", "0.2")
        assert lyapunov_grad(Point2.of(ctx, 0, "0.9"), get_curve("quad", ctx)) == Point2.of(ctx, 0, "0.9")
        curve2 = get_curve("linear:2", ctx)

        # f(t)=2t+t^2 via a shifted quadratic
        from feasikit.sets import AnalyticCurve

        curve = AnalyticCurve.checked(
            f=lambda t: 2 * t + t * t, df=lambda t: 2 + 2 * t, ddf=lambda t: ctx.mpf(2), ctx=ctx
        )
        got = lyapunov_grad(Point2.of(ctx, "0.1", "0.3"), curve)
        assert abs(got.x - ctx.mpf("0.21") / ctx.mpf("2.2")) <= ctx.pow10(-110)
        assert got.z == ctx.mpf("0.3")
        # f'(x) = 0 at x = -1
        with pytest.raises(ZeroDerivativeError):
            lyapunov_grad(Point2.of(ctx, -1, "0.3"), curve)

    def test_lyapunov_descent_along_dr_iterates(self, ctx):
        for ident in ("quad", "cubic"):
            curve = get_curve(ident, ctx)
            t = graph_operator(ctx, curve)
            w = Point2.of(ctx, "0.01", "0.005")
            for _ in range(10):
                step = dr_step(t, w, ctx)
                assert inner(lyapunov_grad(w, curve), step - w) < 0
                w = step

    def test_h_is_one_on_lines(self, ctx):
        rng = random.Random(67)
        for a in ("1", "-2", "0.3"):
            curve = get_curve(f"linear:{a}", ctx)
            for _ in range(10):
                w = Point2.of(ctx, rng.uniform(-2, 2), rng.uniform(-2, 2))
                if norm(w, ctx) < ctx.mpf("0.01"):
                    continue
                assert abs(h_coeff(w, curve, ctx) - 1) <= ctx.pow10(-100)

    def test_h_against_zeta_expression(self, ctx):
        # independent build: multiply numerator and denominator by
        # f'(x) f'(x + z f'(x)) and express both through the zeta terms
        for ident in ("quad", "cubic", "sin-shift"):
            curve = get_curve(ident, ctx)
            for r_exp, theta_num in ((2, 1), (3, 2), (4, 5)):
                r = ctx.pow10(-r_exp)
                theta = ctx.mpf(theta_num)
                w = Point2(r * ctx.mp.cos(theta), r * ctx.mp.sin(theta))
                z1, z2, z3 = zeta_terms(r, theta, curve, ctx)
                fx = curve.f(w.x)
                num = (w.z - fx) * z2 + fx * z1
                den = w.z * z1 - (w.z - fx) * z3
                assert abs(h_coeff(w, curve, ctx) - num / den) <= ctx.pow10(-95)

    def test_h_tends_to_one(self, ctx):
        curve = get_curve("quad", ctx)
        theta = ctx.mpf(1)
        prev_gap = None
        for k in (2, 4, 6, 8):
            r = ctx.pow10(-k)
            w = Point2(r * ctx.mp.cos(theta), r * ctx.mp.sin(theta))
            gap = abs(1 - h_coeff(w, curve, ctx))
            assert gap <= 10 * r
            if prev_gap is not None:
                assert gap < prev_gap
            prev_gap = gap

    def test_h_degenerate_at_origin(self, ctx):
        with pytest.raises(DegenerateDenominatorError):
            h_coeff(Point2.of(ctx, 0, 0), get_curve("quad", ctx), ctx)

    def test_gamma_matches_h(self, ctx):
        rng = random.Random(71)
        for ident in ("quad", "cubic"):
            curve = get_curve(ident, ctx)
            for _ in range(25):
                w = Point2.of(ctx, rng.uniform(-0.05, 0.05), rng.uniform(-0.05, 0.05))
                if norm(w, ctx) < ctx.mpf("1e-4"):
                    continue
                g1, _ = gamma_system(w, curve, ctx)
                assert abs(g1 - h_coeff(w, curve, ctx)) <= ctx.pow10(
                    -(ctx.decimal_digits - 20)
                )

    def test_gamma_singular_at_origin(self, ctx):
        # z = f(x) = 0 zeroes a row of the system
        with pytest.raises(SingularMatrixError):
            gamma_system(Point2.of(ctx, 0, 0), get_curve("quad", ctx), ctx)

    def test_gamma_one_on_lines(self, ctx):
        g1, _ = gamma_system(Point2.of(ctx, "0.1", "0.1"), get_curve("linear:1", ctx), ctx)
        assert abs(g1 - 1) <= ctx.pow10(-100)


class TestLtClosedForm:
    def test_linear_kills_both_coordinates(self, ctx):
        curve = get_curve("linear:2", ctx)
        t = graph_operator(ctx, curve)
        got = lt_closed_form(Point2.of(ctx, "0.3", "-0.1"), t, curve, ctx)
        assert norm(got, ctx) <= ctx.pow10(-100)

    def test_fixed_point(self, ctx):
        curve = get_curve("quad", ctx)
        t = graph_operator(ctx, curve)
        origin = Point2.of(ctx, 0, 0)
        assert lt_closed_form(origin, t, curve, ctx) == origin

    def test_matches_geometric_lt(self, ctx):
        rng = random.Random(73)
        bound = ctx.pow10(-(ctx.decimal_digits - 25))
        for ident in ("quad", "cubic"):
            curve = get_curve(ident, ctx)
            t = graph_operator(ctx, curve)
            for _ in range(10):
                y = Point2.of(ctx, rng.uniform(-0.05, 0.05), rng.uniform(-0.02, 0.02))
                geometric = lt_step(t, y, ctx).result
                closed = lt_closed_form(y, t, curve, ctx)
                assert dist(geometric, closed, ctx) <= bound * max(norm(y, ctx), ctx.mpf(1))


class TestAngularCoefficient:
    def test_nu_examples(self, ctx):
        quad = CurveTaylor.of(get_curve("quad", ctx), ctx)
        assert nu(ctx.mp.zero, quad, ctx) == 0
        assert abs(nu(ctx.mp.pi / 2, quad, ctx) + 1) <= ctx.pow10(-110)
        linear = CurveTaylor.of(get_curve("linear:5", ctx), ctx)
        for theta in (0.3, 1.1, 4.0):
            assert nu(ctx.mpf(theta), linear, ctx) == 0

    def test_zeta_vanishes_at_small_radius(self, ctx):
        curve = get_curve("quad", ctx)
        for z in zeta_terms(ctx.pow10(-30), ctx.mpf(1), curve, ctx):
            assert abs(z) <= ctx.pow10(-29)

    def test_zeta_identity_linear(self, ctx):
        # symbolically zeta1 = x + z, zeta2 = z, zeta3 = x; the floating
        # difference is rounding noise at the last unit
        curve = get_curve("linear:1", ctx)
        for r, theta in ((ctx.mpf("0.37"), ctx.mpf(2)), (ctx.pow10(-5), ctx.mpf("0.8"))):
            z1, z2, z3 = zeta_terms(r, theta, curve, ctx)
            assert abs(z1 - z2 - z3) <= ctx.pow10(-(ctx.decimal_digits - 5)) * r

    def test_zeta_limit_quad(self, ctx):
        curve = get_curve("quad", ctx)
        taylor = CurveTaylor.of(curve, ctx)
        r = ctx.pow10(-4)
        theta = ctx.mp.pi / 4
        z1, z2, z3 = zeta_terms(r, theta, curve, ctx)
        assert abs((z1 - z2 - z3) / (r * r) - nu(theta, taylor, ctx)) <= ctx.mpf("0.01")


class TestProbes:
    def small_grid(self, ctx):
        return ProbeGrid.default(ctx, n_radii=6, n_angles=6, log10_r_max=-1, log10_r_min=-8)

    def test_zeta_probe_passes(self, ctx):
        for ident in ("quad", "cubic"):
            report = probe_zeta_limit(self.small_grid(ctx), get_curve(ident, ctx), ctx)
            assert report.passed
            assert not report.excluded

    def test_zeta_probe_linear_identically_zero(self, ctx):
        report = probe_zeta_limit(self.small_grid(ctx), get_curve("linear:2", ctx), ctx)
        assert report.passed
        for row in report.rows:
            assert row.target == 0
            assert abs(row.value) <= ctx.pow10(-90)

    def test_denominator_probe(self, ctx):
        for ident, a in (("quad", 1), ("linear:3", 3)):
            report = probe_denominator_limit(self.small_grid(ctx), get_curve(ident, ctx), ctx)
            assert report.passed
            targets = {ctx.to_str(row.target) for row in report.rows}
            assert ctx.to_str(ctx.mpf(a)) in targets  # the D/R^2 -> a family
            assert ctx.to_str(ctx.mpf(a) ** 3) in targets  # the a^3 family

    def test_denominator_limit_slope_three(self, ctx):
        # f(t) = 3t + t^2: the scaled denominator tends to a = 3
        from feasikit.sets import AnalyticCurve

        curve = AnalyticCurve.checked(
            f=lambda t: 3 * t + t * t,
            df=lambda t: 3 + 2 * t,
            ddf=lambda t: ctx.mpf(2),
            ctx=ctx,
            ident="slope3",
        )
        report = probe_denominator_limit(self.small_grid(ctx), curve, ctx)
        assert report.passed
        r = ctx.pow10(-8)
        theta = ctx.mpf(1)
        x = r * ctx.mp.cos(theta)
        z = r * ctx.mp.sin(theta)
        x1 = x + z * curve.df(x)
        d = (z * curve.f(x1) / curve.df(x1) - curve.f(x) * (z - curve.f(x)) / curve.df(x)) / (r * r)
        assert abs(d - 3) <= ctx.pow10(-6)

    def test_denominator_numerator_value(self, ctx):
        curve = get_curve("linear:1", ctx)
        r = ctx.pow10(-6)
        theta = ctx.mpf(1)
        x = r * ctx.mp.cos(theta)
        z = r * ctx.mp.sin(theta)
        z1, _, z3 = zeta_terms(r, theta, curve, ctx)
        combo = (z * z1 - (z - curve.f(x)) * z3) / (r * r)
        assert abs(combo - 1) <= ctx.pow10(-5)

    def test_one_minus_h_probe(self, ctx):
        for ident in ("quad", "cubic"):
            report = probe_one_minus_h(self.small_grid(ctx), get_curve(ident, ctx), ctx)
            assert report.passed

    def test_one_minus_h_pointwise_limit(self, ctx):
        # quad at theta = pi/2: limit is (1 - 0) * nu(pi/2) / a^3 = -1
        curve = get_curve("quad", ctx)
        r = ctx.pow10(-6)
        w = Point2(r * ctx.mp.cos(ctx.mp.pi / 2), r * ctx.mp.sin(ctx.mp.pi / 2))
        assert abs((1 - h_coeff(w, curve, ctx)) / r + 1) <= ctx.pow10(-4)

    def test_one_minus_h_zero_prefactor(self, ctx):
        # at tan(theta) = a the prefactor of the limit vanishes
        curve = get_curve("quad", ctx)
        theta = ctx.mp.atan(curve.a)
        r = ctx.pow10(-6)
        w = Point2(r * ctx.mp.cos(theta), r * ctx.mp.sin(theta))
        assert abs((1 - h_coeff(w, curve, ctx)) / r) <= ctx.pow10(-4)

    def test_ratio_probe_quad(self, ctx):
        curve = get_curve("quad", ctx)
        grid = ProbeGrid.default(ctx, n_radii=5, n_angles=6, log10_r_max=-2, log10_r_min=-8)
        report = probe_ratio(grid, graph_operator(ctx, curve), curve, ctx)
        assert report.verdict
        assert report.m_est > 0

    def test_ratio_probe_linear_unbounded_good(self, ctx):
        curve = get_curve("linear:1", ctx)
        grid = ProbeGrid.default(ctx, n_radii=4, n_angles=4, log10_r_max=-2, log10_r_min=-6)
        report = probe_ratio(grid, graph_operator(ctx, curve), curve, ctx)
        assert report.verdict
        assert all(row.unbounded for row in report.rows)
        assert report.m_est == ctx.mp.inf

    def test_ratio_single_point_consistency(self, ctx):
        # hand-assembled ratio from the polar LT coordinate expressions
        curve = get_curve("quad", ctx)
        taylor = CurveTaylor.of(curve, ctx)
        t = graph_operator(ctx, curve)
        y = Point2.of(ctx, "0.001", "0.0004")
        w = dr_step(t, dr_step(t, y, ctx), ctx)
        r_w, theta_w = w.polar(ctx)
        h = h_coeff(w, curve, ctx)
        x = w.x
        lt2 = r_w**2 * ctx.mp.sin(theta_w) * (1 - h) / r_w
        lt1 = (
            r_w**2
            * ctx.mp.cos(theta_w)
            / (curve.a + x * taylor.c(x))
            * (curve.a * (1 - h) / r_w + ctx.mp.cos(theta_w) * (taylor.c(x) - taylor.b(x) * h))
        )
        hand_ratio = r_w**2 / (abs(lt1) + abs(lt2))
        from feasikit.theory import _lt_from_w

        lt = _lt_from_w(w, curve, ctx)
        code_ratio = (w.x**2 + w.z**2) / (abs(lt.x) + abs(lt.z))
        assert abs(hand_ratio - code_ratio) <= ctx.pow10(-50) * code_ratio

    def test_mutated_nu_fails_loudly(self, ctx, monkeypatch):
        real_nu = theory.nu
        monkeypatch.setattr(
            theory, "nu", lambda theta, taylor, c: real_nu(theta, taylor, c) + 1
        )
        grid = self.small_grid(ctx)
        for probe in (probe_zeta_limit, probe_one_minus_h):
            report = probe(grid, get_curve("quad", ctx), ctx)
            assert not report.passed
            assert report.max_violation > 0

    def test_grid_validation(self, ctx):
        with pytest.raises(ValueError):
            ProbeGrid(radii=(ctx.mpf(1), ctx.mpf(2)), angles=(ctx.mpf(1),))
        with pytest.raises(ValueError):
            ProbeGrid(radii=(ctx.mpf(0),), angles=(ctx.mpf(1),))

    def test_report_csv(self, ctx):
        report = probe_zeta_limit(self.small_grid(ctx), get_curve("quad", ctx), ctx)
        text = report.to_csv(ctx)
        lines = text.strip().splitlines()
        assert lines[0] == "# probe: zeta"
        assert lines[2] == "# verdict: pass"
        assert "R,theta,value,target,abs_err" in lines
        header_at = lines.index("R,theta,value,target,abs_err")
        assert len(lines) - header_at - 1 == len(report.rows)


class TestLinearRate:
    def test_values(self, ctx):
        assert abs(linear_rate(get_curve("linear:1", ctx), ctx) - 1 / ctx.mp.sqrt(2)) <= ctx.pow10(-110)
        sqrt3 = ctx.mp.sqrt(3)
        curve = get_curve(f"linear:{ctx.to_str(sqrt3)}", ctx)
        assert abs(linear_rate(curve, ctx) - ctx.mpf("0.5")) <= ctx.pow10(-100)

    def test_monotone_in_slope(self, ctx):
        rates = [
            linear_rate(get_curve(f"linear:{a}", ctx), ctx) for a in (1, 2, 5, 50)
        ]
        assert all(b < a for a, b in zip(rates, rates[1:]))
