"""Push-forwards assembled from the one-variable rules, and commutativity checks.

A push-forward along a coordinate projection runs in a fixed order: valued
coordinates (cell by cell), then residue coordinates, then integer ones.  A
general morphism is factored through its graph.  Every check produces a
:class:`Report` combining a symbolic verdict with an oracle verdict; the
oracle recomputes valued fibers by coset enumeration and the remaining sums
by brute force at L = p.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, Sequence

from .cells import (
    CellFunction, CellPiece, _rebase, _strip_val, coset_window, integrate_piece, padic_integral,
    phase_slope,
)
from .cells import Cell as ValuedCell
from .constructible import ConstructibleExpFn, Space, SpaceMap, build, compare_cexp
from .coeff_ring import RingAElem
from .errors import ArityMismatch, IntegrabilityViolation, NotASubset, NotIntegrable, ValidationError
from .polys import Poly
from .presburger import LinTerm, PresburgerSet, conj, disj, eq
from .presburger_constructible import PresFunction
from .residue_ring import ExpClass
from .verdicts import SPECIALIZATION, UNEQUAL, Verdict, combine

TOL = 1e-9

Function = "ConstructibleExpFn | CellFunction"


# --- extension by zero ------------------------------------------------------------

def _subset(small: Space, big: Space) -> bool:
    if set(small.vars) != set(big.vars):
        return False
    dom = small.int_domain
    if tuple(dom.vars) != tuple(big.int_vars):
        return False
    if not dom.is_subset(big.int_domain):
        return False
    return set(big.res_eqs) <= set(small.res_eqs) and set(big.res_neqs) <= set(small.res_neqs)


def i_shriek(phi, target: Space):
    """Extension by zero from ``phi.space`` to the larger space ``target``."""
    src = phi.space
    if not _subset(src, target):
        raise NotASubset(f"{src.name} is not a subset of {target.name}")
    extra_eqs = tuple(q for q in src.res_eqs if q not in target.res_eqs)
    extra_neqs = tuple(q for q in src.res_neqs if q not in target.res_neqs)
    if isinstance(phi, CellFunction):
        pieces = []
        for pc in phi.pieces:
            base = pc.psi.space
            pres_i = [v for v in base.int_vars if v not in target.int_vars]
            pres_r = [v for v in base.res_vars if v not in target.res_vars]
            big = Space(base.name, tuple(target.int_vars) + tuple(pres_i), tuple(target.res_vars) + tuple(pres_r),
                        target.val_vars, target.int_domain.extend(tuple(target.int_vars) + tuple(pres_i)),
                        target.res_eqs, tuple(target.res_neqs) + tuple(q for q in base.res_neqs if q.variables() <= set(pres_r)))
            small = Space(base.name, big.int_vars, big.res_vars, (), base.int_domain, base.res_eqs, base.res_neqs)
            psi = _extend_by_zero(ConstructibleExpFn(small, pc.psi.terms), _strip_val(big), extra_eqs, extra_neqs)
            pieces.append(CellPiece(pc.cells, ConstructibleExpFn(big, psi.terms), pc.phase, pc.dim, pc.pending))
        return CellFunction(target, pieces)
    return _extend_by_zero(phi, target, extra_eqs, extra_neqs)


def _extend_by_zero(phi: ConstructibleExpFn, target: Space, eqs, neqs) -> ConstructibleExpFn:
    pairs = []
    cls = ExpClass.variety((), eqs, neqs, target.res_vars) if (eqs or neqs) else ExpClass.one(target.res_vars)
    for g, f in phi.terms.items():
        pres = PresFunction(target.int_vars, target.int_domain, f.terms).restrict(phi.space.int_domain)
        pairs.append((ExpClass(target.res_vars, {g: 1}) * cls, pres))
    return build(target, pairs)


def restrict(phi: ConstructibleExpFn, sub: Space) -> ConstructibleExpFn:
    if not _subset(sub, phi.space):
        raise NotASubset(f"{sub.name} is not a subset of {phi.space.name}")
    return build(sub, [(c, PresFunction(sub.int_vars, sub.int_domain, f.terms).restrict(sub.int_domain))
                       for c, f in phi.pairs()])


# --- push-forward along projections ----------------------------------------------------

def _stage(name: str, fn, *args):
    try:
        return fn(*args)
    except NotIntegrable as exc:
        raise NotIntegrable(f"{name} stage: {exc}", exc.witness, stage=name) from exc


def pushforward(phi, forget: Sequence[str], target: Space | None = None, val_order: Sequence[str] | None = None,
                pipeline: str = "direct"):
    """Integrate out the coordinates ``forget``: valued, then residue, then integer."""
    space = phi.space
    unknown = set(forget) - set(space.vars)
    if unknown:
        raise ArityMismatch(f"cannot forget {sorted(unknown)}: not coordinates of {space.name}")
    vals = [v for v in (val_order or space.val_vars) if v in forget]
    res = [v for v in space.res_vars if v in forget]
    ints = [v for v in space.int_vars if v in forget]
    fn = phi
    if isinstance(fn, CellFunction):
        if set(fn.space.val_vars) - set(vals):
            if res or ints:
                raise ArityMismatch("valued coordinates must be integrated before the others")
            return _stage("valued", fn.integrate, vals)
        if pipeline == "phase":
            fn = _stage("valued", phase_substitution_integrate, fn)
        else:
            fn = _stage("valued", fn.integrate, vals)
    elif vals:
        raise ArityMismatch("a constructible function has no valued coordinates to integrate")
    if res:
        fn = _stage("residue", fn.push_res, res)
    if ints:
        fn = _stage("value-group", fn.sum_int, ints)
    if target is not None:
        fn = _rebase(fn, target)
    return fn


def integrable(phi, forget: Sequence[str]) -> tuple[bool, dict | None]:
    try:
        pushforward(phi, forget)
    except NotIntegrable as exc:
        return False, {"stage": exc.stage, "message": str(exc), "witness": _jsonable(exc.witness)}
    return True, None


def _jsonable(x):
    if x is None or isinstance(x, (int, float, str, bool)):
        return x
    if isinstance(x, Mapping):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return str(x)


def phase_substitution_integrate(fn: CellFunction) -> ConstructibleExpFn:
    """Valued integration through the phase itself.

    Each phase ``s*t^m*z + b`` is first used as a new coordinate ``x`` (the
    push-forward by ``z -> (x, ...)`` multiplies by ``L^m``); the integral of
    ``E(x)`` over the image ball is then read off from the ball's order.
    """
    cur = fn
    for var in reversed(fn.space.val_vars):
        pieces = []
        for pc in cur.pieces:
            pieces.extend(integrate_piece(_through_phase(pc, var), var))
        cur = CellFunction(cur.space.drop([var]), pieces)
    return cur.as_constructible()


def _through_phase(pc: CellPiece, var: str) -> CellPiece:
    if pc.phase is None or var not in pc.phase.variables():
        return pc
    cell = pc.cell_for(var)
    if cell.kind == "zero":
        return pc
    sign, m = phase_slope(pc.phase, var)
    moved = ValuedCell("one", var, pc.phase.subs({var: cell.center}), cell.order + m, cell.ac.scale(sign))
    cells = tuple(moved if c.var == var else c for c in pc.cells)
    pending = pc.pending + (cell.presentation.coords if cell.presentation is not None else ())
    psi = pc.psi
    if m:
        psi = psi * RingAElem.L_pow(m)
    return CellPiece(cells, psi, Poly.var(var), pc.dim, pending)


# --- pull-backs along gamma x Id ---------------------------------------------------------

def pull_product(phi, gamma: SpaceMap, X: Space):
    """``(gamma x Id_X)^* phi`` for ``phi`` on ``W' x X``."""
    m = gamma.product_with_identity(_strip_val(X))
    if isinstance(phi, CellFunction):
        return phi.pullback_base(m)
    return phi.pullback(m)


def pull(phi: ConstructibleExpFn, gamma: SpaceMap) -> ConstructibleExpFn:
    return phi.pullback(gamma)


# --- graphs --------------------------------------------------------------------------

def graph_indicator(space: Space, f: SpaceMap) -> ConstructibleExpFn:
    """``1_{y = f(x)}`` on ``space``, which contains the coordinates of source and target of ``f``."""
    cells = []
    for mc, vals in f.int_map.pieces:
        cells.append(conj(mc.to_formula(), *(eq(LinTerm.var(k), v) for k, v in vals.items())))
    s = PresburgerSet.from_formula(disj(*cells), space.int_vars) if cells else PresburgerSet.universe(space.int_vars)
    pres = PresFunction.indicator(space.int_vars, s.intersect(space.int_domain), space.int_domain)
    eqs = tuple(Poly.var(k) - v for k, v in f.res_map.items())
    cls = ExpClass.variety((), eqs, (), space.res_vars) if eqs else ExpClass.one(space.res_vars)
    return build(space, [(cls, pres)])


def _is_projection(f: SpaceMap) -> bool:
    if any(v != Poly.var(k) for k, v in f.res_map.items()):
        return False
    if len(f.int_map.pieces) != 1:
        return False
    (c, vals), = f.int_map.pieces
    return c.is_top() and all(v == LinTerm.var(k) for k, v in vals.items())


def push_via_graph(phi, f: SpaceMap, prefix: Space, X: Space, Y: Space, pipeline: str = "direct"):
    """``(pi x f)_! phi`` for ``phi`` on ``prefix x X``: extend to the graph, then project away ``X``."""
    big = prefix.product(X).product(Y)
    src_nv = _strip_val(prefix.product(X))
    proj = SpaceMap.make(_strip_val(big), src_nv, {v: Poly.var(v) for v in src_nv.res_vars},
                         {v: LinTerm.var(v) for v in src_nv.int_vars})
    fmap = SpaceMap(f.source, f.target, f.res_map, f.int_map)
    ind = graph_indicator(_strip_val(big), fmap)
    if isinstance(phi, CellFunction):
        lifted = phi.pullback_base(proj).scale(ind)
    else:
        lifted = phi.pullback(proj) * ind
    return pushforward(lifted, X.vars, pipeline=pipeline)


# --- reports ------------------------------------------------------------------------------

@dataclass
class CheckResult:
    name: str
    verdict: Verdict

    def to_json(self) -> dict:
        return {"name": self.name, **self.verdict.to_json()}


@dataclass
class Report:
    scenario: str
    checks: list = field(default_factory=list)
    integrability: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    error: dict | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and all(c.verdict.ok for c in self.checks)

    def add(self, name: str, verdict: Verdict) -> Verdict:
        self.checks.append(CheckResult(name, verdict))
        return verdict

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "scenario": self.scenario,
            "ok": self.ok,
            "checks": [c.to_json() for c in self.checks],
            "integrability": _jsonable(self.integrability),
        }
        if self.error is not None:
            out["error"] = _jsonable(self.error)
        if timing:
            out["timing"] = {k: round(v, 6) for k, v in self.timing.items()}
        return out

    def dumps(self, timing: bool = True) -> str:
        return json.dumps(self.to_json(timing), indent=2, sort_keys=True)

    def to_text(self, timing: bool = True) -> str:
        lines = [f"scenario {self.scenario}: {'PASS' if self.ok else 'FAIL'}"]
        for k, v in self.integrability.items():
            lines.append(f"  integrable {k}: {json.dumps(_jsonable(v), sort_keys=True)}")
        for c in self.checks:
            v = c.verdict
            line = f"  {c.name}: {v.kind} (checks={v.checks}, max_delta={v.max_delta:.3e})"
            if v.witness is not None:
                line += f" witness={json.dumps(_jsonable(v.witness), sort_keys=True)}"
            lines.append(line)
        if self.error is not None:
            lines.append(f"  error: {json.dumps(_jsonable(self.error), sort_keys=True)}")
        if timing:
            for k, v in self.timing.items():
                lines.append(f"  time {k}: {v:.3f}s")
        return "\n".join(lines)


# --- oracle -------------------------------------------------------------------------------

def _points(space: Space, vars: Sequence[str], p: int, box: int, fixed_int, fixed_res):
    ivars = [v for v in space.int_vars if v in vars]
    rvars = [v for v in space.res_vars if v in vars]
    rpts = []
    for vals in product(range(p), repeat=len(rvars)):
        env = dict(fixed_res, **dict(zip(rvars, vals)))
        if any(q.eval_mod(env, p) for q in space.res_eqs) or any(q.eval_mod(env, p) == 0 for q in space.res_neqs):
            continue
        rpts.append(env)
    ipts = []
    for vals in product(range(-box, box + 1), repeat=len(ivars)):
        env = dict(fixed_int, **dict(zip(ivars, vals)))
        if space.int_domain.contains(env):
            ipts.append(env)
    return ipts, rpts


def brute_push(fn: ConstructibleExpFn, forget: Sequence[str], int_point, res_point, p: int, box: int) -> complex:
    """Sum of ``fn`` over the forgotten residue points and integer points in the box, at L = p."""
    ipts, rpts = _points(fn.space, forget, p, box, int_point, res_point)
    total = 0j
    for ip in ipts:
        for rp in rpts:
            total += fn.evaluate(ip, rp, p).to_complex()
    return total


def valued_oracle(fn: CellFunction, primes=(3, 5), box: int = 2, max_cosets: int = 4000, limit: int = 12) -> Verdict:
    """Compare the symbolic valued integral with coset enumeration on sample base points."""
    sym = fn.integrate()
    space = sym.space
    checks, worst = 0, 0.0
    for p in primes:
        for ip in space.int_points(box, limit):
            for rp in space.res_points(p, 4):
                try:
                    M, N = coset_window(fn, ip, rp, p, 2)
                except KeyError:
                    continue
                if p ** ((M + N) * len(fn.space.val_vars)) > max_cosets:
                    continue
                got = complex(padic_integral(fn, ip, rp, p))
                want = sym.evaluate(ip, rp, p).to_complex()
                checks += 1
                delta = abs(got - want)
                worst = max(worst, delta)
                if delta > TOL:
                    return Verdict(UNEQUAL, {"p": p, "int": ip, "res": rp, "symbolic": str(want), "cosets": str(got)},
                                   checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)


def _fmt(z: complex) -> str:
    if abs(z.imag) < 1e-12:
        return f"{z.real:.12g}"
    return f"{z.real:.12g}{z.imag:+.12g}i"


# --- scenarios ------------------------------------------------------------------------------

@dataclass
class Scenario:
    """Data of a commutativity check over a point base.

    ``phi`` lives on ``Wp x X``; ``gamma`` maps ``W`` to ``Wp``.  Optional
    parts: a morphism ``f: X -> Y`` on the non-valued coordinates (valued
    coordinates of X are integrated), an ambient space for the inclusion
    square and a second map ``gamma2: Wp -> W2`` for the composition square.
    """

    name: str
    W: Space
    Wp: Space
    X: Space
    gamma: SpaceMap
    phi: object
    surjective: bool = False
    Y: Space | None = None
    f: SpaceMap | None = None
    ambient: Space | None = None
    phi_small: object = None
    gamma2: SpaceMap | None = None
    W2: Space | None = None
    phi2: object = None
    pipeline: str = "direct"
    qs: tuple = (2, 3)
    primes: tuple = (3, 5, 7)
    level: int = 4
    box: int = 30
    wbox: int = 2
    source: str | None = None

    def validate(self) -> None:
        if self.gamma.source.vars != self.W.vars or self.gamma.target.vars != self.Wp.vars:
            raise ValidationError(f"gamma must map {self.W.name} to {self.Wp.name}", "map gamma")
        want = set(self.Wp.vars) | set(self.X.vars)
        if set(self.phi.space.vars) != want:
            raise ValidationError(f"phi must live on {self.Wp.name} x {self.X.name}", "function phi")
        if self.f is not None and (self.Y is None or self.f.target.vars != self.Y.vars):
            raise ValidationError("f needs a target space Y matching its codomain", "map f")
        if self.gamma2 is not None and (self.W2 is None or self.gamma2.source.vars != self.Wp.vars):
            raise ValidationError("gamma2 must map Wp to W2", "map gamma2")


def _w_points(space: Space, p: int, box: int):
    return [(ip, rp) for ip in space.int_points(box, 6) for rp in space.res_points(p, 3)]


def _gamma_point(gamma: SpaceMap, ip, rp, p):
    return gamma(ip, rp, p)


def compare_with_oracle(lhs: ConstructibleExpFn, rhs: ConstructibleExpFn, gamma: SpaceMap,
                        phi_pulled, phi, X: Space, sc: Scenario) -> Verdict:
    """Brute-force both sides of the square at sample points of W."""
    checks, worst = 0, 0.0
    lhs_stage = phi_pulled.integrate() if isinstance(phi_pulled, CellFunction) else phi_pulled
    rhs_stage = phi.integrate() if isinstance(phi, CellFunction) else phi
    forget = [v for v in X.vars if v not in X.val_vars]
    for p in sc.primes:
        for ip, rp in _w_points(sc.W, p, sc.wbox):
            gip, grp = gamma(ip, rp, p)
            a = brute_push(lhs_stage, forget, ip, rp, p, sc.box)
            b = brute_push(rhs_stage, forget, gip, grp, p, sc.box)
            sa = lhs.evaluate(ip, rp, p).to_complex()
            sb = rhs.evaluate(gip, grp, p).to_complex()
            checks += 1
            delta = max(abs(a - b), abs(a - sa), abs(b - sb))
            worst = max(worst, delta)
            if delta > TOL:
                return Verdict(UNEQUAL, {"p": p, "int": ip, "res": rp, "lhs_oracle": _fmt(a), "rhs_oracle": _fmt(b),
                                         "lhs_symbolic": _fmt(sa), "rhs_symbolic": _fmt(sb)}, checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)


def _timed(rep: Report, key: str, fn, *args):
    t0 = time.perf_counter()
    try:
        return fn(*args)
    finally:
        rep.timing[key] = rep.timing.get(key, 0.0) + time.perf_counter() - t0


def check_commutativity(sc: Scenario) -> Report:
    """Compare ``pi_W!((gamma x Id)^* phi)`` with ``gamma^*(pi_W'!(phi))`` and the optional squares."""
    sc.validate()
    rep = Report(sc.name)
    t0 = time.perf_counter()
    X = sc.X
    pulled = _timed(rep, "pullback", pull_product, sc.phi, sc.gamma, X)
    lhs_ok, lhs_w = _timed(rep, "integrability", integrable, pulled, X.vars)
    rhs_ok, rhs_w = _timed(rep, "integrability", integrable, sc.phi, X.vars)
    rep.integrability = {"lhs": lhs_ok, "rhs": rhs_ok, "surjective": sc.surjective}
    if lhs_w:
        rep.integrability["lhs_witness"] = lhs_w
    if rhs_w:
        rep.integrability["rhs_witness"] = rhs_w
    if rhs_ok and not lhs_ok:
        raise IntegrabilityViolation(f"{sc.name}: phi is integrable but its pull-back is not ({lhs_w})")
    if lhs_ok and not rhs_ok and sc.surjective:
        raise IntegrabilityViolation(f"{sc.name}: pull-back integrable under a surjective map but phi is not ({rhs_w})")
    if isinstance(sc.phi, CellFunction):
        rep.add("valued-oracle", _timed(rep, "oracle", valued_oracle, sc.phi, sc.primes[:2]))
    if lhs_ok and rhs_ok:
        lhs = _timed(rep, "symbolic", pushforward, pulled, X.vars)
        rhs_push = _timed(rep, "symbolic", pushforward, sc.phi, X.vars)
        rhs = _timed(rep, "symbolic", pull, rhs_push, sc.gamma)
        rep.add("pullback-square", _timed(rep, "symbolic", compare_cexp, lhs, rhs, sc.qs, sc.primes))
        rep.add("pullback-square-oracle", _timed(rep, "oracle", compare_with_oracle, lhs, rhs_push, sc.gamma, pulled, sc.phi, X, sc))
        if isinstance(sc.phi, CellFunction) and any(pc.phase is not None for pc in sc.phi.pieces):
            alt = _timed(rep, "symbolic", pushforward, sc.phi, X.vars, None, None, "phase")
            rep.add("phase-substitution", _timed(rep, "symbolic", compare_cexp, alt, rhs_push, sc.qs, sc.primes))
    elif lhs_ok:
        rep.add("image-restricted", _timed(rep, "symbolic", _image_check, sc, pulled))
    if sc.f is not None and lhs_ok and rhs_ok:
        rep.add("graph-factorization", _timed(rep, "symbolic", _graph_factorization, sc, pulled))
    if sc.ambient is not None:
        sym, orc = _timed(rep, "symbolic", check_extension_square, sc)
        rep.add("extension-square", sym)
        rep.add("extension-square-oracle", orc)
    if sc.gamma2 is not None:
        sym, orc = _timed(rep, "symbolic", check_splitting, sc)
        rep.add("splitting-square", sym)
        rep.add("splitting-square-oracle", orc)
    rep.timing["total"] = time.perf_counter() - t0
    return rep


def _image_check(sc: Scenario, pulled) -> Verdict:
    """Non-surjective gamma: compare with phi restricted to the image of gamma."""
    img = sc.gamma.int_map.image()
    Xnv = _strip_val(sc.X)
    prod = sc.Wp.product(Xnv)
    s = img.extend(prod.int_vars).intersect(prod.int_domain)
    ind = ConstructibleExpFn.from_pres(prod, PresFunction.indicator(prod.int_vars, s, prod.int_domain))
    phi_img = sc.phi.scale(ind) if isinstance(sc.phi, CellFunction) else sc.phi * ind
    ok, w = integrable(phi_img, sc.X.vars)
    if not ok:
        return Verdict(UNEQUAL, {"reason": "phi restricted to the image of gamma is not integrable", **(w or {})})
    lhs = pushforward(pulled, sc.X.vars)
    rhs = pull(pushforward(phi_img, sc.X.vars), sc.gamma)
    v = compare_cexp(lhs, rhs, sc.qs, sc.primes)
    v.notes.append("gamma not surjective: compared on its image")
    return v


def _graph_factorization(sc: Scenario, pulled) -> Verdict:
    """``(gamma x Id_Y)^*((pi_W' x f)_! phi) = (pi_W x f)_!((gamma x Id_X)^* phi)``, via the graph."""
    lhs = push_via_graph(pulled, sc.f, sc.W, sc.X, sc.Y, sc.pipeline)
    rhs_push = push_via_graph(sc.phi, sc.f, sc.Wp, sc.X, sc.Y, sc.pipeline)
    rhs = rhs_push.pullback(sc.gamma.product_with_identity(sc.Y))
    lhs = _rebase(lhs, rhs.space)
    verdicts = [compare_cexp(lhs, rhs, sc.qs, sc.primes)]
    if _is_projection(sc.f):
        keep = set(sc.Y.vars)
        direct = pushforward(pulled, [v for v in sc.X.vars if v not in keep])
        verdicts.append(compare_cexp(_rebase(direct, lhs.space), lhs, sc.qs, sc.primes))
    verdicts.append(_graph_oracle(sc, pulled, lhs))
    return combine(*verdicts)


def _graph_oracle(sc: Scenario, pulled, lhs: ConstructibleExpFn) -> Verdict:
    """Brute force ``sum over x with f(x) = y`` of the pulled-back function."""
    stage = pulled.integrate() if isinstance(pulled, CellFunction) else pulled
    forget = [v for v in sc.X.vars if v not in sc.X.val_vars]
    checks, worst = 0, 0.0
    for p in sc.primes:
        for ip, rp in _w_points(sc.W, p, sc.wbox):
            for yi in sc.Y.int_points(sc.wbox, 5):
                for yr in sc.Y.res_points(p, 3):
                    ipts, rpts = _points(stage.space, forget, p, sc.box, ip, rp)
                    total = 0j
                    for xi in ipts:
                        for xr in rpts:
                            fi, fr = sc.f(xi, xr, p)
                            if fi == yi and fr == yr:
                                total += stage.evaluate(xi, xr, p).to_complex()
                    want = lhs.evaluate({**ip, **yi}, {**rp, **yr}, p).to_complex()
                    checks += 1
                    delta = abs(total - want)
                    worst = max(worst, delta)
                    if delta > TOL:
                        return Verdict(UNEQUAL, {"p": p, "int": {**ip, **yi}, "res": {**rp, **yr},
                                                 "oracle": _fmt(total), "symbolic": _fmt(want)}, checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)


def check_extension_square(sc: Scenario) -> tuple[Verdict, Verdict]:
    """``(gamma x Id_Y)^* i_! = i_! (gamma x Id_X)^*`` for ``phi_small`` on ``Wp x X`` inside ``Wp x ambient``.

    Returns the symbolic comparison and a pointwise oracle that evaluates
    ``phi_small`` at ``(gamma(w), a)`` directly, or 0 when ``a`` is outside X.
    """
    small = sc.phi_small if sc.phi_small is not None else sc.phi
    big_target = sc.Wp.product(sc.ambient)
    left = pull_product(i_shriek(small, big_target), sc.gamma, sc.ambient)
    right = i_shriek(pull_product(small, sc.gamma, sc.X), sc.W.product(sc.ambient))
    if isinstance(left, CellFunction):
        forget = sc.ambient.val_vars
        left, right = pushforward(left, forget), pushforward(right, forget)
    right = _rebase(right, left.space)
    return compare_cexp(left, right, sc.qs, sc.primes), _extension_oracle(sc, small, left)


def _in_space(space: Space, ip, rp, p: int) -> bool:
    return (space.int_domain.contains({v: ip[v] for v in space.int_vars})
            and all(q.eval_mod(rp, p) == 0 for q in space.res_eqs)
            and all(q.eval_mod(rp, p) != 0 for q in space.res_neqs))


def _extension_oracle(sc: Scenario, small, left: ConstructibleExpFn) -> Verdict:
    amb = _strip_val(sc.ambient)
    checks, worst = 0, 0.0
    for p in sc.primes:
        for ip, rp in _w_points(sc.W, p, sc.wbox):
            gip, grp = sc.gamma(ip, rp, p)
            for ai in amb.int_points(sc.wbox, 6):
                for ar in amb.res_points(p, 4):
                    if not _in_space(_strip_val(sc.X), ai, ar, p):
                        want = 0j
                    elif isinstance(small, CellFunction):
                        want = complex(padic_integral(small, {**gip, **ai}, {**grp, **ar}, p))
                    else:
                        want = small.evaluate({**gip, **ai}, {**grp, **ar}, p).to_complex()
                    got = left.evaluate({**ip, **ai}, {**rp, **ar}, p).to_complex()
                    checks += 1
                    delta = abs(got - want)
                    worst = max(worst, delta)
                    if delta > TOL:
                        return Verdict(UNEQUAL, {"p": p, "int": {**ip, **ai}, "res": {**rp, **ar},
                                                 "oracle": _fmt(want), "symbolic": _fmt(got)}, checks, delta)
    return Verdict(SPECIALIZATION, None, checks, worst)


def check_splitting(sc: Scenario) -> tuple[Verdict, Verdict]:
    """The two small squares and, independently, the composed square; plus a brute-force composite check."""
    X = sc.X
    phi2 = sc.phi2
    if phi2 is None:
        raise ArityMismatch("the composition square needs phi2 on W2 x X")
    v_outer = _square(phi2, sc.gamma2, X, sc)
    mid = pull_product(phi2, sc.gamma2, X)
    v_inner = _square(mid, sc.gamma, X, sc)
    comp = SpaceMap.make(sc.W, sc.W2, {k: v.subs(sc.gamma.res_map) for k, v in sc.gamma2.res_map.items()},
                         sc.gamma2.int_map.compose(sc.gamma.int_map))
    v_comp = _square(phi2, comp, X, sc)
    pulled = pull_product(phi2, comp, X)
    lhs = pushforward(pulled, X.vars)
    oracle = compare_with_oracle(lhs, pushforward(phi2, X.vars), comp, pulled, phi2, X, sc)
    return combine(v_outer, v_inner, v_comp), oracle


def _square(phi, gamma: SpaceMap, X: Space, sc: Scenario) -> Verdict:
    lhs = pushforward(pull_product(phi, gamma, X), X.vars)
    rhs = pull(pushforward(phi, X.vars), gamma)
    return compare_cexp(lhs, rhs, sc.qs, sc.primes)


# --- axioms --------------------------------------------------------------------------------

def check_fubini(phi, orders: Sequence[Sequence[str]], qs=(2, 3), primes=(3, 5, 7)) -> Verdict:
    """Integrating the same coordinates in different orders gives equal results."""
    results = []
    for order in orders:
        fn = phi
        for v in order:
            if isinstance(fn, CellFunction):
                fn = fn.integrate([v])
            elif v in fn.space.res_vars:
                fn = fn.push_res([v])
            else:
                fn = fn.sum_int([v])
        results.append(fn)
    first = results[0]
    return combine(*(compare_cexp(first, _rebase(r, first.space), qs, primes) for r in results[1:]))


def check_additivity(parts: Sequence, forget: Sequence[str], qs=(2, 3), primes=(3, 5, 7)) -> Verdict:
    """Push-forward of a sum of disjointly supported pieces equals the sum of push-forwards."""
    total = parts[0]
    for p in parts[1:]:
        total = total + p
    whole = pushforward(total, forget)
    acc = None
    for p in parts:
        r = _rebase(pushforward(p, forget), whole.space)
        acc = r if acc is None else acc + r
    return compare_cexp(whole, acc, qs, primes)


def check_projection_formula(beta, alpha: ConstructibleExpFn, forget: Sequence[str], qs=(2, 3),
                             primes=(3, 5, 7)) -> Report:
    """``f_!(f^*(alpha) beta) = alpha f_!(beta)`` for the projection forgetting ``forget``."""
    rep = Report("projection-formula")
    t0 = time.perf_counter()
    src = _strip_val(beta.space)
    f = SpaceMap.make(src, alpha.space, {v: Poly.var(v) for v in alpha.space.res_vars},
                      {v: LinTerm.var(v) for v in alpha.space.int_vars})
    pulled = alpha.pullback(f)
    prod = beta.scale(pulled) if isinstance(beta, CellFunction) else beta * pulled
    ok1, w1 = integrable(beta, forget)
    ok2, w2 = integrable(prod, forget)
    rep.integrability = {"beta": ok1, "product": ok2}
    if not (ok1 and ok2):
        rep.error = {"beta": w1, "product": w2}
        return rep
    lhs = pushforward(prod, forget)
    rhs = alpha * _rebase(pushforward(beta, forget), alpha.space)
    rep.add("projection-formula", compare_cexp(_rebase(lhs, alpha.space), rhs, qs, primes))
    rep.timing["total"] = time.perf_counter() - t0
    return rep


def check_axioms(phi, forget: Sequence[str], alpha: ConstructibleExpFn | None = None, qs=(2, 3),
                 primes=(3, 5, 7)) -> Report:
    """Fubini over all orders of the integer/residue coordinates, and the projection formula with ``alpha``."""
    rep = Report("axioms")
    t0 = time.perf_counter()
    ok, w = integrable(phi, forget)
    rep.integrability = {"phi": ok}
    if not ok:
        rep.error = w
        return rep
    vals = [v for v in phi.space.val_vars if v in forget]
    rest = [v for v in forget if v not in vals]
    if len(rest) >= 2 or len(vals) >= 2:
        base = phi.integrate(vals) if vals and rest else phi
        if len(vals) >= 2 and not rest:
            rep.add("fubini", check_fubini(phi, [vals, vals[::-1]], qs, primes))
        elif len(rest) >= 2:
            rep.add("fubini", check_fubini(base, [rest, rest[::-1]], qs, primes))
    if isinstance(phi, CellFunction):
        rep.add("valued-oracle", valued_oracle(phi, primes[:2]))
    if alpha is not None:
        pf = check_projection_formula(phi, alpha, forget, qs, primes)
        rep.checks.extend(pf.checks)
        if pf.error:
            rep.error = pf.error
    rep.timing["total"] = time.perf_counter() - t0
    return rep
