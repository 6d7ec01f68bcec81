"""Acceptance criteria, one PASS/FAIL line each (also collected in the pytest summary).

Run standalone with ``python tests/test_acceptance.py`` or through pytest.
"""
import sys
import time
import warnings
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from conftest import ACCEPTANCE_LINES, f_cdr, u_exact, ux_exact, uy_exact, variable_coefficients  # noqa: E402
from oracles import exact_form, shunting_yard_eval  # noqa: E402
from ncvem.dofs import interpolate  # noqa: E402
from ncvem.expr import ExprEvalError, ExprSyntaxError, evaluate, parse, to_polynomial  # noqa: E402
from ncvem.forms import CoefficientField, divergence_mass, local_forms  # noqa: E402
from ncvem.meshgen import builtin_mesh  # noqa: E402
from ncvem.poly import dim_poly, scaled_to_poly2  # noqa: E402
from ncvem.postproc import (  # noqa: E402
    ManufacturedProblem,
    broken_error,
    convergence_study,
    jump_diagnostic,
    ls_slope,
    rhs_consistency_error,
)
from ncvem.projectors import build_element_projectors  # noqa: E402
from ncvem.system import Discretization, apply_dirichlet, assemble, broken_h1_gram, coercivity_diagnostic, solve_problem  # noqa: E402

# quantities at or below this floor at every level are exact to round-off; no slope is measurable
ROUNDOFF = 1e-13

CONSISTENCY_MESHES = ("quad", "distorted-quad", "polygonal-dual")
SKEW_MESHES = ("quad", "distorted-quad", "polygonal-dual", "tri")
CDR = CoefficientField.constant(1.0, beta=(1.0, 1.0), c=1.0)
LEVELS = {1: [8, 16, 32, 64], 2: [4, 8, 16, 32]}


def record(num: int, name: str, ok: bool, detail: str, elapsed: float, limit: float):
    ok = ok and elapsed < limit
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d} {name}: {detail} ({elapsed:.2f}s, limit {limit:g}s)"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def _meshes(families, n=4):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return {fam: builtin_mesh(fam, n) for fam in families}


def _slope_or_roundoff(hs, values, need):
    """(ok, text) for a decay-rate requirement; all-round-off sequences satisfy any bound."""
    if max(values) <= ROUNDOFF:
        return True, f"<= {ROUNDOFF:g} at every level (exact to round-off, slope undefined)"
    s = ls_slope(hs, values)
    return bool(s >= need), f"slope {s:.3f} (need >= {need:g})"


@pytest.fixture(scope="module")
def studies():
    """Convergence studies of criteria 4 and 5, timed individually."""
    problem = ManufacturedProblem(CDR, f_cdr, 0.0, u_exact, ux_exact, uy_exact)
    out = {}
    for k in (1, 2):
        t0 = time.perf_counter()
        table = convergence_study(problem, "quad", LEVELS[k], k)
        out[k] = (table, time.perf_counter() - t0)
    return out


def test_criterion_01_polynomial_consistency():
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    co = variable_coefficients()
    worst = 0.0
    for fam, m in _meshes(CONSISTENCY_MESHES).items():
        for k in (1, 2):
            for c in range(m.n_cells):
                P = build_element_projectors(m, c, k)
                A = local_forms(m, P, co).total
                V = m.cell_vertices(c)
                cache = {}
                for _ in range(20):
                    a, b = rng.normal(size=(2, dim_poly(k)))
                    p = scaled_to_poly2(a, P.center, P.h, k)
                    q = scaled_to_poly2(b, P.center, P.h, k)
                    ex = exact_form(V, co, p, q, cache)
                    got = (P.D @ b) @ A @ (P.D @ a)
                    worst = max(worst, abs(got - ex) / (1 + abs(ex)))
    record(1, "polynomial consistency", worst <= 1e-10, f"max |A_h - A|/(1+|A|) = {worst:.2e} (tol 1e-10)",
           time.perf_counter() - t0, 10)


def test_criterion_02_projector_identities():
    t0 = time.perf_counter()
    worst = 0.0
    for fam, m in _meshes(CONSISTENCY_MESHES).items():
        for k in (1, 2):
            I = np.eye(dim_poly(k))
            for c in range(m.n_cells):
                P = build_element_projectors(m, c, k)
                worst = max(worst, np.abs(P.G @ P.D - P.grad_mono).max(), np.abs(P.F @ P.D - I).max(),
                            np.abs(P.E @ P.D - I).max())
    record(2, "projector identities", worst <= 1e-11, f"max coefficient error {worst:.2e} (tol 1e-11)",
           time.perf_counter() - t0, 5)


def test_criterion_03_reproduction():
    t0 = time.perf_counter()
    mesh = _meshes(["distorted-quad"], 8)["distorted-quad"]
    zero = lambda x, y: np.zeros_like(x)  # noqa: E731
    cases = {
        1: (lambda x, y: x + y, lambda x, y: np.ones_like(x), lambda x, y: np.ones_like(x)),
        2: (lambda x, y: x * x - y * y, lambda x, y: 2 * x, lambda x, y: -2 * y),
    }
    errs = {}
    for k, (p, px, py) in cases.items():
        disc, _, sol = solve_problem(mesh, k, CoefficientField.constant(1.0), zero, p)
        errs[k] = broken_error(disc, sol.values, p, (px, py)).err_full
    ok = all(e <= 1e-8 for e in errs.values())
    record(3, "reproduction", ok, f"||u-u_h||_1,h k=1: {errs[1]:.2e}, k=2: {errs[2]:.2e} (tol 1e-8)",
           time.perf_counter() - t0, 5)


def test_criterion_04_convergence_k1(studies):
    table, elapsed = studies[1]
    s1, s0 = table.slope("h1"), table.slope("l2")
    record(4, "convergence k=1", 0.85 <= s1 <= 1.15,
           f"broken-H1 slope {s1:.3f} in [0.85, 1.15]; L2 slope {s0:.3f} (observational)", elapsed, 60)


def test_criterion_05_convergence_k2(studies):
    table, elapsed = studies[2]
    s1, s0 = table.slope("h1"), table.slope("l2")
    record(5, "convergence k=2", s1 >= 1.85, f"broken-H1 slope {s1:.3f} (need >= 1.85); L2 slope {s0:.3f} (observational)",
           elapsed, 120)


def test_criterion_06_coercivity_shadow():
    t0 = time.perf_counter()
    alphas = []
    for k in (1, 2):
        for n in LEVELS[k]:
            disc = Discretization(builtin_mesh("quad", n), k)
            system = apply_dirichlet(assemble(disc, CDR), 0.0)
            alphas.append(coercivity_diagnostic(system, broken_h1_gram(disc)))
    alphas = np.array(alphas)
    ok = bool(alphas.min() > 0 and alphas.max() / alphas.min() < 3)
    record(6, "coercivity shadow", ok,
           f"generalized min eigenvalues in [{alphas.min():.4f}, {alphas.max():.4f}], ratio {alphas.max() / alphas.min():.3f} (< 3)",
           time.perf_counter() - t0, 60)


def test_criterion_07_skew_identity():
    t0 = time.perf_counter()
    free = CoefficientField.constant(1.0, beta=(1.0, 1.0))
    co = variable_coefficients()
    w_free = w_div = 0.0
    for fam, m in _meshes(SKEW_MESHES).items():
        for k in (1, 2):
            for c in range(m.n_cells):
                P = build_element_projectors(m, c, k)
                B = local_forms(m, P, free).A_conv
                w_free = max(w_free, np.abs(B + B.T).max())
                B = local_forms(m, P, co).A_conv
                w_div = max(w_div, np.abs(B + B.T + divergence_mass(m, P, co)).max())
    record(7, "skew identity", w_free <= 1e-11 and w_div <= 1e-11,
           f"div-free max {w_free:.1e}, beta=(x,y) with M_div max {w_div:.1e} (tol 1e-11)", time.perf_counter() - t0, 10)


def test_criterion_08_jump_shadow():
    t0 = time.perf_counter()
    parts, ok = [], True
    for fam in ("quad", "distorted-quad"):
        for k in (1, 2):
            hs, js = [], []
            for n in (8, 16, 32, 64):
                disc = Discretization(builtin_mesh(fam, n), k)
                hs.append(disc.mesh.h)
                js.append(jump_diagnostic(disc, interpolate(disc.dofmap, u_exact))["max"])
            good, text = _slope_or_roundoff(hs, js, k - 0.2)
            ok &= good
            parts.append(f"{fam} k={k}: {text}")
    record(8, "jump/patch-test shadow", ok, "; ".join(parts), time.perf_counter() - t0, 30)


def test_criterion_09_rhs_shadow():
    t0 = time.perf_counter()
    v = lambda x, y: x + y  # noqa: E731
    parts, ok = [], True
    for k, need in ((1, 1.0), (2, 2.0)):
        hs, es = [], []
        for n in (8, 16, 32, 64):
            disc = Discretization(builtin_mesh("quad", n), k)
            hs.append(disc.mesh.h)
            es.append(rhs_consistency_error(disc, u_exact, v))
        good, text = _slope_or_roundoff(hs, es, need)
        ok &= good
        parts.append(f"k={k}: {text}, max {max(es):.1e}")
    record(9, "RHS bound shadow", ok, "; ".join(parts), time.perf_counter() - t0, 30)


def _random_expr(rng, depth, poly_only):
    if depth == 0 or rng.random() < 0.25:
        r = rng.random()
        if r < 0.4:
            return f"{rng.integers(1, 10)}" if rng.random() < 0.6 else f"{rng.uniform(0.1, 3):.3f}"
        return "x" if r < 0.7 else "y" if r < 0.95 else ("2" if poly_only else "pi")
    kind = rng.integers(0, 5 if poly_only else 7)
    a = _random_expr(rng, depth - 1, poly_only)
    b = _random_expr(rng, depth - 1, poly_only)
    return [
        f"{a} + {b}", f"{a} - {b}", f"{a}*{b}", f"({a})^{rng.integers(0, 4)}", f"-({a})",
        f"{['sin', 'cos', 'exp'][rng.integers(0, 3)]}(({a})/4)", f"{a}/({rng.integers(1, 5)} + y*y)",
    ][kind]


def test_criterion_10_expression_parser():
    t0 = time.perf_counter()
    rng = np.random.default_rng(10)
    alphabet = np.array(list("xy0123456789.+-*/^() pisncoexp"))
    crashes = 0
    for _ in range(10_000):
        text = "".join(rng.choice(alphabet, rng.integers(0, 30)))
        try:
            tree = parse(text)
            with np.errstate(all="ignore"):
                evaluate(tree, 0.3, 0.7)
        except (ExprSyntaxError, ExprEvalError):
            pass
        except Exception:  # noqa: BLE001
            crashes += 1
    pts = rng.uniform(-1, 1, (100, 2))
    rt = 0.0
    for _ in range(200):
        tree = parse(_random_expr(rng, 4, True))
        direct = evaluate(tree, pts[:, 0], pts[:, 1])
        rt = max(rt, np.abs(to_polynomial(tree)(pts[:, 0], pts[:, 1]) - direct).max() / max(1.0, np.abs(direct).max()))
    prec, checked = 0.0, 0
    while checked < 50:
        text = _random_expr(rng, 4, False)
        x, y = rng.uniform(-1, 1, 2)
        ref = shunting_yard_eval(text, x, y)
        if not np.isfinite(ref):
            continue  # overflowing samples carry no precedence information
        checked += 1
        with np.errstate(all="ignore"):
            prec = max(prec, abs(float(evaluate(parse(text), x, y)) - ref) / max(1.0, abs(ref)))
    ok = crashes == 0 and rt <= 1e-12 and prec <= 1e-14
    record(10, "expression parser", ok,
           f"fuzz 10^4 crashes {crashes}; round-trip {rt:.1e} (tol 1e-12); precedence {prec:.1e} (tol 1e-14)",
           time.perf_counter() - t0, 10)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
