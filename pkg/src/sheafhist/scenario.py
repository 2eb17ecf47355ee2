"""Scenario files: JSON description of states, propositions, contexts and checks.

See ``docs/scenario-schema.md`` in the repository for the full schema.  Scalars
are numbers, strings holding a small arithmetic expression (``"1/2"``,
``"-1/sqrt(2)"``) or ``[re, im]`` pairs; matrices are row-major nested lists.
"""

from __future__ import annotations

import ast
import hashlib
import json
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import linalg as la
from .contexts import Context, ContextPoset, close_poset, context_from_commuting
from .decoherence import DensityMatrix, Evolution, History, TimedHistory, history_join, history_not
from .errors import InexactValueError, NonCommutingError, ScenarioError, SheafHistError

FIXTURES = ("qubit-z", "qubit-zx", "two-time-qubit", "peres-mermin-dim4",
            "singlet-entanglement", "decoherence-z-basis")

_SECTIONS = {"name", "description", "dims", "kets", "unitaries", "observables", "projectors",
             "contexts", "histories", "density", "evolution", "checks"}
_CHECKS = {"daseinize", "truth", "history_truth", "ks", "decohere", "verify", "entangled"}


# --------------------------------------------------------------------------
# scalars and matrices

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}


def _eval_expr(node):
    if isinstance(node, ast.Expression):
        return _eval_expr(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
        return Fraction(node.value) if isinstance(node.value, int) else float(node.value)
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval_expr(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        a, b = _eval_expr(node.left), _eval_expr(node.right)
        if isinstance(a, float) or isinstance(b, float):
            a, b = float(a), float(b)
        return _BINOPS[type(node.op)](a, b)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id == "sqrt"
            and len(node.args) == 1 and not node.keywords):
        v = _eval_expr(node.args[0])
        if isinstance(v, Fraction) and v >= 0:
            n, d = math.isqrt(v.numerator), math.isqrt(v.denominator)
            if n * n == v.numerator and d * d == v.denominator:
                return Fraction(n, d)
        return math.sqrt(float(v))
    raise ValueError("unsupported expression")


def parse_real(x, where: str):
    """Number or expression string -> Fraction (when exact) or float."""
    if isinstance(x, bool):
        raise ScenarioError("expected a number, got a boolean", obj=where)
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return _eval_expr(ast.parse(x.strip(), mode="eval"))
        except (SyntaxError, ValueError, ZeroDivisionError) as exc:
            raise ScenarioError(f"cannot parse {x!r} as a number ({exc})", obj=where) from None
    raise ScenarioError(f"expected a number, got {type(x).__name__}", obj=where)


def parse_scalar(x, where: str) -> tuple:
    if isinstance(x, list):
        if len(x) != 2:
            raise ScenarioError("complex values are [re, im] pairs", obj=where)
        return parse_real(x[0], where), parse_real(x[1], where)
    return parse_real(x, where), Fraction(0)


def parse_vector(v, exact: bool, where: str, sink: list) -> np.ndarray:
    if not isinstance(v, list) or not v:
        raise ScenarioError("expected a non-empty list of amplitudes", obj=where)
    vals = [parse_scalar(x, f"{where}[{k}]") for k, x in enumerate(v)]
    return _finish(np.array(vals, dtype=object).reshape(len(vals), 2), exact, where, sink)


def parse_matrix(m, exact: bool, where: str, sink: list) -> np.ndarray:
    if not isinstance(m, list) or not m or not all(isinstance(r, list) for r in m):
        raise ScenarioError("expected a matrix as a list of rows", obj=where)
    n = len(m)
    if any(len(r) != n for r in m):
        raise ScenarioError(f"matrix must be square ({n} rows)", obj=where)
    vals = [parse_scalar(x, f"{where}[{i}][{j}]") for i, r in enumerate(m) for j, x in enumerate(r)]
    return _finish(np.array(vals, dtype=object).reshape(n, n, 2), exact, where, sink)


def _finish(parts: np.ndarray, exact: bool, where: str, sink: list) -> np.ndarray:
    shape = parts.shape[:-1]
    if exact:
        try:
            out = np.empty(shape, dtype=object)
            for idx in np.ndindex(shape):
                re, im = parts[idx]
                out[idx] = la.QComplex(_exactify(re), _exactify(im))
            return out
        except InexactValueError:
            sink.append(where)
    out = np.empty(shape, dtype=complex)
    for idx in np.ndindex(shape):
        re, im = parts[idx]
        out[idx] = complex(float(re), float(im))
    return out


def _exactify(x):
    return x if isinstance(x, Fraction) else la.rationalize(x)


# --------------------------------------------------------------------------
# scenario


@dataclass
class Scenario:
    name: str
    description: str
    dims: tuple
    kets: dict = field(default_factory=dict)
    unitaries: dict = field(default_factory=dict)
    observables: dict = field(default_factory=dict)
    projectors: dict = field(default_factory=dict)
    contexts: dict = field(default_factory=dict)
    context_slots: dict = field(default_factory=dict)
    posets: dict = field(default_factory=dict)
    tensor_contexts: dict = field(default_factory=dict)
    histories: dict = field(default_factory=dict)
    density: DensityMatrix | None = None
    evolution: Evolution | None = None
    checks: dict = field(default_factory=dict)
    exact: bool = False
    inexact: list = field(default_factory=list)
    digest: str = ""
    source: str = ""

    def poset(self, slot: int = 0) -> ContextPoset:
        return self.posets[slot]

    def slot_of_dim(self, dim: int) -> list:
        return [k for k, d in enumerate(self.dims) if d == dim]


def fixture_path(name: str) -> Path:
    if name not in FIXTURES:
        raise ScenarioError(f"unknown fixture {name!r}; known: {', '.join(FIXTURES)}")
    return Path(str(resources.files("sheafhist") / "fixtures" / f"{name}.json"))


def load_scenario(path, exact: bool = False) -> Scenario:
    """Read, parse and validate a scenario file (or a shipped fixture by name)."""
    p = Path(path)
    if not p.exists() and str(path) in FIXTURES:
        p = fixture_path(str(path))
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(f"cannot read scenario: {exc.strerror}", path=str(path)) from None
    return parse_scenario(text, exact=exact, source=str(p))


def parse_scenario(text: str, exact: bool = False, source: str = "<string>") -> Scenario:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(exc.msg, path=source,
                            line=exc.lineno, column=exc.colno) from None
    if not isinstance(raw, dict):
        raise ScenarioError("top level must be an object", path=source)
    try:
        sc = _Builder(raw, exact, source).build()
    except ScenarioError as exc:
        if exc.path is None:
            exc.path = source
        raise
    sc.digest = hashlib.sha256(
        json.dumps(raw, sort_keys=True, separators=(",", ":")).encode("utf-8")
    ).hexdigest()[:16]
    return sc


class _Builder:
    def __init__(self, raw: dict, exact: bool, source: str):
        self.raw = raw
        self.exact = exact
        self.source = source
        self.inexact: list = []

    def fail(self, where: str, msg: str):
        raise ScenarioError(msg, path=self.source, obj=where)

    def section(self, key: str) -> dict:
        val = self.raw.get(key, {})
        if not isinstance(val, dict):
            self.fail(key, "must be an object")
        return val

    def build(self) -> Scenario:
        unknown = set(self.raw) - _SECTIONS
        if unknown:
            self.fail(sorted(unknown)[0], "unknown top-level key")
        name = self.raw.get("name", "scenario")
        dims = self.raw.get("dims")
        if not isinstance(dims, list) or not dims or not all(isinstance(d, int) and d >= 1 for d in dims):
            self.fail("dims", "must be a non-empty list of positive integers")
        for d in dims:
            if d > la.max_dim():
                self.fail("dims", f"dimension {d} exceeds the configured bound {la.max_dim()}")
        self.dims = tuple(dims)
        sc = Scenario(name=str(name), description=str(self.raw.get("description", "")), dims=self.dims,
                      exact=self.exact, source=self.source)
        self.sc = sc
        self._kets()
        self._unitaries()
        self._observables()
        self._projectors()
        self._contexts()
        self._histories()
        self._density()
        self._evolution()
        self._checks()
        sc.inexact = self.inexact
        return sc

    # -- states and operators

    def _kets(self):
        for name, spec in self.section("kets").items():
            where = f"kets.{name}"
            normalize = False
            if isinstance(spec, dict):
                normalize = bool(spec.get("normalize", False))
                spec = spec.get("amplitudes")
            v = parse_vector(spec, self.exact, where, self.inexact)
            if normalize:
                v = self._normalize(v, where)
            try:
                v = la.require_unit(v, "ket")
            except SheafHistError as exc:
                self.fail(where, str(exc))
            self.sc.kets[name] = v

    def _normalize(self, v, where):
        if la.is_exact(v):
            n2 = la.norm2(v)
            n, d = math.isqrt(n2.numerator), math.isqrt(n2.denominator)
            if n * n == n2.numerator and d * d == n2.denominator and n:
                return v * la.QComplex(Fraction(d, n))
            self.inexact.append(where)
            v = la.to_float(v)
        return la.normalize(v)

    def _unitaries(self):
        for name, spec in self.section("unitaries").items():
            where = f"unitaries.{name}"
            m = self._matrix(spec, where)
            try:
                self.sc.unitaries[name] = la.require_unitary(m, "matrix")
            except SheafHistError as exc:
                self.fail(where, str(exc))

    def _matrix(self, spec, where):
        scale = None
        if isinstance(spec, dict):
            scale = spec.get("scale")
            spec = spec.get("matrix")
        m = parse_matrix(spec, self.exact, where, self.inexact)
        if scale is not None:
            sm = parse_matrix([[scale]], self.exact, f"{where}.scale", self.inexact)
            if la.is_exact(m) and la.is_exact(sm):
                m = m * sm[0, 0]
            else:
                if la.is_exact(m):
                    self.inexact.append(where)
                m = la.to_float(m) * complex(la.to_float(sm)[0, 0])
        return m

    def _observables(self):
        for name, spec in self.section("observables").items():
            where = f"observables.{name}"
            if isinstance(spec, dict) and "kron" in spec:
                ms = [self._ref(self.sc.observables, o, f"{where}.kron") for o in spec["kron"]]
                m = la.kron_all(ms)
            else:
                m = la.square(self._matrix(spec, where))
            if not la.is_hermitian(m):
                self.fail(where, "observable is not self-adjoint")
            self.sc.observables[name] = m

    def _ref(self, table: dict, name, where: str):
        if not isinstance(name, str) or name not in table:
            self.fail(where, f"unresolved reference {name!r}")
        return table[name]

    def _projectors(self):
        for name, spec in self.section("projectors").items():
            where = f"projectors.{name}"
            p = self._projector(spec, where)
            try:
                self.sc.projectors[name] = la.require_projector(p, "matrix")
            except SheafHistError as exc:
                self.fail(where, str(exc))

    def _projector(self, spec, where):
        if isinstance(spec, list):
            return parse_matrix(spec, self.exact, where, self.inexact)
        if not isinstance(spec, dict):
            self.fail(where, "expected a matrix or an object")
        if "matrix" in spec:
            return self._matrix(spec, where)
        if "observable" in spec:
            obs = self._ref(self.sc.observables, spec["observable"], f"{where}.observable")
            delta = spec.get("delta")
            if not isinstance(delta, list) or not delta:
                self.fail(f"{where}.delta", "must be a non-empty list of eigenvalues")
            vals = [parse_real(x, f"{where}.delta") for x in delta]
            return spectral_projector(obs, vals)
        if "ket" in spec:
            return la.projector_from_ket(self._ref(self.sc.kets, spec["ket"], f"{where}.ket"))
        if "kron" in spec:
            return la.kron_all([self._ref(self.sc.projectors, q, f"{where}.kron") for q in spec["kron"]])
        if "sum" in spec:
            ps = [self._ref(self.sc.projectors, q, f"{where}.sum") for q in spec["sum"]]
            out = ps[0]
            for q in ps[1:]:
                out = out + q
            return out
        self.fail(where, "expected one of matrix, observable, ket, kron, sum")

    # -- contexts

    def _contexts(self):
        per_slot = {k: [] for k in range(len(self.dims))}
        for name, spec in self.section("contexts").items():
            where = f"contexts.{name}"
            if isinstance(spec, list):
                spec = {"generators": spec}
            if not isinstance(spec, dict) or not isinstance(spec.get("generators"), list):
                self.fail(where, "needs a generators list")
            gens, labels = [], []
            for g in spec["generators"]:
                if isinstance(g, str) and g in self.sc.projectors:
                    gens.append(self.sc.projectors[g])
                    labels.append(g)
                elif isinstance(g, str) and g in self.sc.observables:
                    for k, q in enumerate(eigenprojectors(self.sc.observables[g])):
                        gens.append(q)
                        labels.append(f"{g}#{k}")
                else:
                    self.fail(where, f"unresolved generator {g!r}")
            try:
                ctx = context_from_commuting(gens, name=name, labels=labels)
            except NonCommutingError as exc:
                raise ScenarioError(str(exc), path=self.source, obj=where) from None
            except SheafHistError as exc:
                self.fail(where, str(exc))
            slot = spec.get("slot")
            if slot == "tensor":
                self.sc.tensor_contexts[name] = ctx
                self.sc.context_slots[name] = "tensor"
            else:
                slots = self._slots(slot, ctx.dim, where)
                for k in slots:
                    per_slot[k].append(ctx)
                self.sc.context_slots[name] = slots
            self.sc.contexts[name] = ctx
        for k, d in enumerate(self.dims):
            self.sc.posets[k] = close_poset(per_slot[k], dim=d, exact=self.exact)

    def _slots(self, slot, dim, where):
        if slot is None:
            slots = [k for k, d in enumerate(self.dims) if d == dim]
            if not slots:
                self.fail(where, f"no time slot has dimension {dim}")
            return slots
        slots = slot if isinstance(slot, list) else [slot]
        for k in slots:
            if not isinstance(k, int) or not 0 <= k < len(self.dims):
                self.fail(where, f"invalid slot {k!r}")
            if self.dims[k] != dim:
                self.fail(where, f"context of dim {dim} placed in slot {k} of dim {self.dims[k]}")
        return slots

    # -- histories and dynamics

    def _histories(self):
        for name, spec in self.section("histories").items():
            where = f"histories.{name}"
            if not isinstance(spec, dict):
                self.fail(where, "must be an object")
            try:
                if "join" in spec:
                    hs = [self._ref(self.sc.histories, x, f"{where}.join") for x in spec["join"]]
                    h = history_join(*hs)
                elif "not" in spec:
                    h = history_not(self._ref(self.sc.histories, spec["not"], f"{where}.not"))
                else:
                    times = [float(parse_real(t, f"{where}.times")) for t in spec.get("times", [])]
                    ps = [self._ref(self.sc.projectors, q, f"{where}.projectors") for q in spec.get("projectors", [])]
                    h = History.of(TimedHistory(tuple(times), tuple(ps)))
            except ScenarioError:
                raise
            except (SheafHistError, ValueError) as exc:
                self.fail(where, str(exc))
            self.sc.histories[name] = h

    def _density(self):
        spec = self.raw.get("density")
        if spec is None:
            return
        where = "density"
        try:
            if isinstance(spec, dict) and "ket" in spec:
                self.sc.density = DensityMatrix.pure(self._ref(self.sc.kets, spec["ket"], "density.ket"))
            else:
                m = self._matrix(spec, where)
                self.sc.density = DensityMatrix(m)
        except ScenarioError:
            raise
        except (SheafHistError, ValueError) as exc:
            self.fail(where, str(exc))

    def _evolution(self):
        spec = self.raw.get("evolution", "trivial")
        where = "evolution"
        dim = self.dims[0]
        try:
            if spec == "trivial":
                self.sc.evolution = Evolution.trivial(dim)
            elif isinstance(spec, dict) and "hamiltonian" in spec:
                hsp = spec["hamiltonian"]
                hm = self.sc.observables[hsp] if isinstance(hsp, str) and hsp in self.sc.observables \
                    else self._matrix(hsp, "evolution.hamiltonian")
                self.sc.evolution = Evolution.from_hamiltonian(hm)
            elif isinstance(spec, dict) and "steps" in spec:
                st = spec["steps"]
                times = [float(parse_real(t, "evolution.steps.times")) for t in st.get("times", [])]
                us = [self._ref(self.sc.unitaries, u, "evolution.steps.unitaries") for u in st.get("unitaries", [])]
                self.sc.evolution = Evolution.from_steps(times, us)
            else:
                self.fail(where, "expected \"trivial\", {hamiltonian} or {steps}")
        except ScenarioError:
            raise
        except (SheafHistError, ValueError) as exc:
            self.fail(where, str(exc))

    # -- checks

    def _checks(self):
        checks = self.section("checks")
        unknown = set(checks) - _CHECKS
        if unknown:
            self.fail(f"checks.{sorted(unknown)[0]}", "unknown check")
        sc = self.sc
        for k, name in enumerate(checks.get("daseinize", [])):
            self._ref(sc.projectors, name, f"checks.daseinize[{k}]")
        for k, t in enumerate(checks.get("truth", [])):
            where = f"checks.truth[{k}]"
            psi = self._ref(sc.kets, t.get("state"), f"{where}.state")
            p = self._ref(sc.projectors, t.get("proposition"), f"{where}.proposition")
            slot = t.get("slot", 0)
            if not isinstance(slot, int) or not 0 <= slot < len(self.dims):
                self.fail(where, f"invalid slot {slot!r}")
            if psi.size != self.dims[slot] or p.shape[0] != self.dims[slot]:
                self.fail(where, "state or proposition does not match the slot dimension")
        for k, t in enumerate(checks.get("history_truth", [])):
            where = f"checks.history_truth[{k}]"
            psi = self._ref(sc.kets, t.get("initial"), f"{where}.initial")
            props = [self._ref(sc.projectors, q, f"{where}.propositions") for q in t.get("propositions", [])]
            us = [self._ref(sc.unitaries, u, f"{where}.evolution") for u in t.get("evolution", [])]
            if not props or len(props) > len(self.dims):
                self.fail(where, "need between 1 and len(dims) propositions")
            if len(us) != len(props) - 1:
                self.fail(where, f"need {len(props) - 1} evolution operators, got {len(us)}")
            if psi.size != self.dims[0]:
                self.fail(where, "initial state does not match slot 0")
            for s, q in enumerate(props):
                if q.shape[0] != self.dims[s]:
                    self.fail(where, f"proposition {s} does not match slot {s}")
        dec = checks.get("decohere", {})
        for k, fam in enumerate(dec.get("families", [])):
            names = fam.get("histories", []) if isinstance(fam, dict) else fam
            for n in names:
                self._ref(sc.histories, n, f"checks.decohere.families[{k}]")
        if dec and sc.density is None:
            self.fail("checks.decohere", "needs a density section")
        ent = checks.get("entangled", {})
        if ent:
            self._ref(sc.projectors, ent.get("projector"), "checks.entangled.projector")
            for c in ent.get("contexts", []):
                self._ref(sc.tensor_contexts, c, "checks.entangled.contexts")
        sc.checks = checks


# --------------------------------------------------------------------------
# spectral projectors


def _distinct(values, tol):
    out = []
    for v in sorted(values):
        if not out or abs(v - out[-1]) > tol:
            out.append(v)
    return out


def eigenvalues(obs) -> list:
    """Distinct eigenvalues (exact Fractions when the observable is exact and they are rational)."""
    w = np.linalg.eigvalsh(la.to_float(obs))
    vals = _distinct(w.tolist(), 1e-7)
    if la.is_exact(obs):
        try:
            return [la.rationalize(round(v, 9)) for v in vals]
        except InexactValueError:
            pass
    return vals


def spectral_projector(obs, delta) -> np.ndarray:
    """Sum of the eigenprojectors of ``obs`` for eigenvalues lying in ``delta``."""
    vals = eigenvalues(obs)
    chosen = [v for v in vals if any(abs(float(v) - float(d)) <= 1e-7 for d in delta)]
    n = obs.shape[0]
    if la.is_exact(obs) and all(isinstance(v, Fraction) for v in vals):
        # Lagrange interpolation keeps the result exact
        out = la.zeros(n, True)
        one = la.identity(n, True)
        for lam in chosen:
            term = one
            for mu in vals:
                if mu != lam:
                    term = la.matmul(term, (obs - one * la.QComplex(mu))) * la.QComplex(1 / (lam - mu))
            out = out + term
        return out
    a = la.to_float(obs)
    w, vecs = np.linalg.eigh(a)
    out = np.zeros((n, n), dtype=complex)
    for k, lam in enumerate(w):
        if any(abs(lam - float(c)) <= 1e-7 for c in chosen):
            out += np.outer(vecs[:, k], vecs[:, k].conj())
    return out


def eigenprojectors(obs) -> list:
    return [spectral_projector(obs, [v]) for v in eigenvalues(obs)]
