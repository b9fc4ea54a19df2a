"""Physical flow network model: nodes, edges, physics functions and costs.

Potentials are the nodal state variables (squared pressure for gas, complex
voltage in rectangular coordinates for AC with K=2 components).  All physics
evaluation is pure; every type is immutable after construction.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field

from .errors import InputError
from .intervals import Interval, signed_sqrt

_ID_RE = re.compile(r"^[A-Za-z0-9_.-]+$")


# ---------------------------------------------------------------------------
# cost functions

@dataclass(frozen=True)
class CostFunction:
    """Univariate cost with exact evaluation and exact minimum over a box.

    kinds: ``affine`` (c0 + c1 x), ``quadratic`` (c0 + c1 x + c2 x^2),
    ``pwl`` (piecewise linear through ``points``, end segments extended),
    ``abs_dev`` (weight * |x - ref|).
    """

    kind: str
    coeffs: tuple[float, ...] = ()
    points: tuple[tuple[float, float], ...] = ()

    def __call__(self, x: float) -> float:
        if self.kind == "affine":
            c0, c1 = self.coeffs
            return c0 + c1 * x
        if self.kind == "quadratic":
            c0, c1, c2 = self.coeffs
            return c0 + x * (c1 + c2 * x)
        if self.kind == "abs_dev":
            w, ref = self.coeffs
            return w * abs(x - ref)
        if self.kind == "pwl":
            return _pwl_eval(self.points, x)
        raise InputError(f"unknown cost kind {self.kind!r}")

    def min_on(self, iv: Interval) -> float:
        """Exact minimum over a closed interval."""
        if self.kind == "affine":
            c0, c1 = self.coeffs
            return c0 + c1 * (iv.lo if c1 >= 0 else iv.hi)
        if self.kind == "quadratic":
            c0, c1, c2 = self.coeffs
            best = min(self(iv.lo), self(iv.hi))
            if c2 > 0:
                vertex = -c1 / (2.0 * c2)
                if iv.lo <= vertex <= iv.hi:
                    best = min(best, self(vertex))
            return best
        if self.kind == "abs_dev":
            w, ref = self.coeffs
            if iv.contains(ref):
                return 0.0
            return w * min(abs(iv.lo - ref), abs(iv.hi - ref))
        if self.kind == "pwl":
            best = min(self(iv.lo), self(iv.hi))
            for x, y in self.points:
                if iv.lo <= x <= iv.hi:
                    best = min(best, y)
            return best
        raise InputError(f"unknown cost kind {self.kind!r}")

    def is_convex(self) -> bool:
        if self.kind == "quadratic":
            return self.coeffs[2] >= 0
        return True

    def issues(self) -> list[str]:
        out = []
        if self.kind in ("affine",) and len(self.coeffs) != 2:
            out.append("affine cost needs coeffs [c0, c1]")
        if self.kind == "quadratic" and len(self.coeffs) != 3:
            out.append("quadratic cost needs coeffs [c0, c1, c2]")
        if self.kind == "abs_dev":
            if len(self.coeffs) != 2:
                out.append("abs_dev cost needs [weight, ref]")
            elif self.coeffs[0] < 0:
                out.append("abs_dev weight must be nonnegative")
        if self.kind == "pwl":
            if len(self.points) < 2:
                out.append("pwl cost needs at least two points")
            else:
                xs = [p[0] for p in self.points]
                if any(b <= a for a, b in zip(xs, xs[1:])):
                    out.append("pwl breakpoints must be strictly increasing")
        if self.kind not in ("affine", "quadratic", "abs_dev", "pwl"):
            out.append(f"unknown cost kind {self.kind!r}")
        return out


def _pwl_eval(points, x: float) -> float:
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    if x <= xs[0]:
        s = (ys[1] - ys[0]) / (xs[1] - xs[0])
        return ys[0] + s * (x - xs[0])
    if x >= xs[-1]:
        s = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2])
        return ys[-1] + s * (x - xs[-1])
    for k in range(len(xs) - 1):
        if xs[k] <= x <= xs[k + 1]:
            t = (x - xs[k]) / (xs[k + 1] - xs[k])
            return ys[k] + t * (ys[k + 1] - ys[k])
    raise AssertionError("unreachable")


# ---------------------------------------------------------------------------
# edge physics kinds

@dataclass(frozen=True)
class GasWeymouth:
    """Weymouth pipe law: flow = gamma * sign(d) * sqrt(|d|), d = pi_i - pi_j + offset."""

    gamma: float
    offset: float = 0.0

    kind = "gas"


@dataclass(frozen=True)
class ACPowerVoltage:
    """Complex power leaving the from-side: V_i * conj((V_i - V_j) / z)."""

    resistance: float
    reactance: float

    kind = "ac_power"


@dataclass(frozen=True)
class ACCurrentVoltage:
    """Linear Kirchhoff current: J = (V_i - V_j) / z."""

    resistance: float
    reactance: float

    kind = "ac_current"


@dataclass(frozen=True)
class Dissipative:
    """Monotone inverse marginal-energy map applied to the potential drop.

    Power law ``coefficient * sign(d) * |d|**exponent`` unless ``table`` is
    given, in which case the map is the piecewise-linear interpolation of the
    (nondecreasing) table with end segments extended.
    """

    coefficient: float = 1.0
    exponent: float = 1.0
    table: tuple[tuple[float, float], ...] = ()

    kind = "dissipative"


@dataclass(frozen=True)
class CustomTable:
    """Sampled monotone flow law with an enclosure pad for sampling error."""

    table: tuple[tuple[float, float], ...]
    pad: float = 0.0

    kind = "custom_table"


PHYSICS_KINDS = ("gas", "ac_power", "ac_current", "dissipative", "custom_table")


def physics_components(physics) -> int | None:
    """Required component count, or None when any K works componentwise."""
    if isinstance(physics, GasWeymouth):
        return 1
    if isinstance(physics, (ACPowerVoltage, ACCurrentVoltage)):
        return 2
    return None


def physics_is_diagonal(physics) -> bool:
    """True when component k of the flow depends on component k alone."""
    return not isinstance(physics, (ACPowerVoltage, ACCurrentVoltage))


def physics_is_antisymmetric(physics) -> bool:
    """True when the reverse flow is exactly the negated forward flow."""
    return not isinstance(physics, ACPowerVoltage)


def _monotone_map(physics, d: float) -> float:
    if isinstance(physics, GasWeymouth):
        return physics.gamma * signed_sqrt(d)
    if isinstance(physics, Dissipative):
        if physics.table:
            return _pwl_eval(physics.table, d)
        return physics.coefficient * math.copysign(abs(d) ** physics.exponent, d)
    if isinstance(physics, CustomTable):
        return _pwl_eval(physics.table, d)
    raise AssertionError(f"not a scalar monotone physics: {physics}")


def _monotone_map_interval(physics, d: Interval) -> Interval:
    lo = _monotone_map(physics, d.lo)
    hi = _monotone_map(physics, d.hi)
    if isinstance(physics, CustomTable) and physics.pad:
        return Interval(lo - physics.pad, hi + physics.pad)
    return Interval(lo, hi)


def monotone_map_inverse(physics, flow: Interval) -> Interval | None:
    """Exact preimage of a flow interval under the scalar map, when closed form."""
    if isinstance(physics, GasWeymouth):
        y = flow.scale(1.0 / physics.gamma)
        return Interval(math.copysign(y.lo * y.lo, y.lo), math.copysign(y.hi * y.hi, y.hi))
    if isinstance(physics, Dissipative) and not physics.table:
        c, p = physics.coefficient, physics.exponent

        def inv(v):
            return math.copysign((abs(v) / c) ** (1.0 / p), v)

        return Interval(inv(flow.lo), inv(flow.hi))
    return None


def _ac_impedance(physics) -> tuple[float, float, float]:
    r, x = physics.resistance, physics.reactance
    return r, x, r * r + x * x


def _ac_power_point(a, b, c, d, r, x, z2):
    dre, dim = a - c, b - d
    e = a * dre + b * dim
    f = b * dre - a * dim
    return ((e * r - f * x) / z2, (e * x + f * r) / z2)


def _ac_power_box(A, B, C, D, r, x, z2):
    dre, dim = A - C, B - D
    e = A * dre + B * dim
    f = B * dre - A * dim
    p = (e.scale(r) - f.scale(x)).scale(1.0 / z2)
    q = (e.scale(x) + f.scale(r)).scale(1.0 / z2)
    return (p, q)


def _ac_current_point(a, b, c, d, r, x, z2):
    dre, dim = a - c, b - d
    return ((dre * r + dim * x) / z2, (dim * r - dre * x) / z2)


def _ac_current_box(A, B, C, D, r, x, z2):
    dre, dim = A - C, B - D
    jre = (dre.scale(r) + dim.scale(x)).scale(1.0 / z2)
    jim = (dim.scale(r) - dre.scale(x)).scale(1.0 / z2)
    return (jre, jim)


# ---------------------------------------------------------------------------
# transforms

@dataclass(frozen=True)
class TransformSpec:
    """Port relation at a degree-2 node: potential(out side) = T(potential(in side)).

    ``ratio_range`` turns a K=1 multiplicative coefficient into a decision
    variable (compression optimization); ``ratio_cost`` prices it.
    """

    kind: str                # multiplicative | additive | tabulated
    in_node: str
    out_node: str
    coeffs: tuple[float, ...] = ()
    tables: tuple[tuple[tuple[float, float], ...], ...] = ()
    ratio_range: Interval | None = None
    ratio_cost: CostFunction | None = None

    def has_decision_ratio(self) -> bool:
        return self.ratio_range is not None


def apply_transform(spec: TransformSpec, pi_in, alpha: float | None = None):
    """Map the in-port potential vector to the out-port potential vector."""
    vals = tuple(float(v) for v in pi_in)
    if any(not math.isfinite(v) for v in vals):
        raise InputError("non-finite potential")
    if spec.kind == "multiplicative":
        if spec.has_decision_ratio():
            if alpha is None:
                raise InputError("transform ratio is a decision variable; pass alpha")
            a = alpha
        else:
            if len(spec.coeffs) == 2 and len(vals) == 2:
                ar, ai = spec.coeffs
                return (ar * vals[0] - ai * vals[1], ar * vals[1] + ai * vals[0])
            a = spec.coeffs[0]
        if len(vals) == 1 and a <= 0:
            raise InputError("multiplicative compression coefficient must be positive")
        return tuple(a * v for v in vals)
    if spec.kind == "additive":
        return tuple(v + b for v, b in zip(vals, spec.coeffs))
    if spec.kind == "tabulated":
        return tuple(_pwl_eval(tab, v) for tab, v in zip(spec.tables, vals))
    raise InputError(f"unknown transform kind {spec.kind!r}")


def transform_box(spec: TransformSpec, boxes_in, alpha_box: Interval | None = None):
    """Sound enclosure of the out-port potentials over in-port boxes."""
    if spec.kind == "multiplicative":
        if spec.has_decision_ratio():
            a = alpha_box if alpha_box is not None else spec.ratio_range
            return tuple(b * a for b in boxes_in)
        if len(spec.coeffs) == 2 and len(boxes_in) == 2:
            ar, ai = spec.coeffs
            re = boxes_in[0].scale(ar) - boxes_in[1].scale(ai)
            im = boxes_in[1].scale(ar) + boxes_in[0].scale(ai)
            return (re, im)
        return tuple(b.scale(spec.coeffs[0]) for b in boxes_in)
    if spec.kind == "additive":
        return tuple(b.shift(c) for b, c in zip(boxes_in, spec.coeffs))
    if spec.kind == "tabulated":
        out = []
        for tab, b in zip(spec.tables, boxes_in):
            out.append(Interval(_pwl_eval(tab, b.lo), _pwl_eval(tab, b.hi)))
        return tuple(out)
    raise InputError(f"unknown transform kind {spec.kind!r}")


# ---------------------------------------------------------------------------
# network model types

@dataclass(frozen=True)
class NodeSpec:
    id: str
    injection: tuple[Interval, ...]
    potential: tuple[Interval, ...]
    costs: tuple[CostFunction | None, ...] = ()
    transform: TransformSpec | None = None
    is_slack: bool = False


@dataclass(frozen=True)
class EdgeSpec:
    frm: str
    to: str
    physics: object
    flow_domain: tuple[Interval, ...]

    @property
    def key(self) -> tuple[str, str]:
        return (self.frm, self.to)


@dataclass(frozen=True)
class AggregatorSpec:
    members: tuple[str, ...]
    lower: float
    upper: float
    component: int = 0


@dataclass(frozen=True)
class Network:
    nodes: tuple[NodeSpec, ...]
    edges: tuple[EdgeSpec, ...]
    slack: str | None
    components: int = 1
    objective: str = "min_cost"
    aggregators: tuple[AggregatorSpec, ...] = ()
    _index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {n.id: n for n in self.nodes})

    def node(self, node_id: str) -> NodeSpec:
        return self._index[node_id]

    def has_node(self, node_id: str) -> bool:
        return node_id in self._index

    @property
    def slack_id(self) -> str:
        ids = self.slack_candidates()
        if len(ids) != 1:
            raise InputError(f"network has {len(ids)} slack nodes, expected exactly one")
        return ids[0]

    def slack_candidates(self) -> list[str]:
        if self.slack is not None:
            return [self.slack]
        return [n.id for n in self.nodes if n.is_slack]

    def incident(self, node_id: str) -> list[EdgeSpec]:
        return [e for e in self.edges if node_id in (e.frm, e.to)]

    def degree(self, node_id: str) -> int:
        return len(self.incident(node_id))


# ---------------------------------------------------------------------------
# physics evaluation

def edge_flow(edge: EdgeSpec, pi_from, pi_to, forward: bool = True):
    """Flow vector leaving the from-side of the requested direction.

    ``forward=True`` evaluates the declared direction (edge.frm -> edge.to)
    with ``pi_from`` the potential at ``edge.frm``; ``forward=False`` the
    reverse direction with ``pi_from`` at ``edge.to``.
    """
    pf = tuple(float(v) for v in pi_from)
    pt = tuple(float(v) for v in pi_to)
    if any(not math.isfinite(v) for v in pf + pt):
        raise InputError("non-finite potential")
    ph = edge.physics
    if physics_is_diagonal(ph):
        if forward:
            off = ph.offset if isinstance(ph, GasWeymouth) else 0.0
            return tuple(_monotone_map(ph, a - b + off) for a, b in zip(pf, pt))
        # antisymmetric reverse: negate the declared-direction value
        off = ph.offset if isinstance(ph, GasWeymouth) else 0.0
        return tuple(-_monotone_map(ph, b - a + off) for a, b in zip(pf, pt))
    r, x, z2 = _ac_impedance(ph)
    a, b = pf
    c, d = pt
    if isinstance(ph, ACPowerVoltage):
        return _ac_power_point(a, b, c, d, r, x, z2)
    return _ac_current_point(a, b, c, d, r, x, z2)


def edge_flow_enclosure(edge: EdgeSpec, box_from, box_to, forward: bool = True):
    """Interval vector containing every flow value over the potential boxes.

    Exact (endpoint) enclosure for the scalar monotone kinds; natural interval
    extension of the rectangular formulas for AC.
    """
    ph = edge.physics
    if physics_is_diagonal(ph):
        off = ph.offset if isinstance(ph, GasWeymouth) else 0.0
        if forward:
            return tuple(
                _monotone_map_interval(ph, (a - b).shift(off))
                for a, b in zip(box_from, box_to)
            )
        return tuple(
            -_monotone_map_interval(ph, (b - a).shift(off))
            for a, b in zip(box_from, box_to)
        )
    r, x, z2 = _ac_impedance(ph)
    A, B = box_from
    C, D = box_to
    if isinstance(ph, ACPowerVoltage):
        return _ac_power_box(A, B, C, D, r, x, z2)
    return _ac_current_box(A, B, C, D, r, x, z2)


# ---------------------------------------------------------------------------
# validation

@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    violations: tuple[str, ...]


def validate_network(net: Network) -> ValidationReport:
    """Check every structural invariant; never raises, reports all findings."""
    v: list[str] = []
    k = net.components
    if k < 1:
        v.append("component count must be >= 1")

    seen_ids = set()
    for n in net.nodes:
        if not _ID_RE.match(n.id or ""):
            v.append(f"node id {n.id!r} must match [A-Za-z0-9_.-]+")
        if n.id in seen_ids:
            v.append(f"duplicate node id {n.id!r}")
        seen_ids.add(n.id)
        _check_domains(v, f"node {n.id} injection", n.injection, k)
        _check_domains(v, f"node {n.id} potential", n.potential, k)
        if len(n.costs) not in (0, k):
            v.append(f"node {n.id}: cost list length must equal component count")
        for c in n.costs:
            if c is not None:
                for issue in c.issues():
                    v.append(f"node {n.id} cost: {issue}")

    slack_ids = net.slack_candidates()
    if len(slack_ids) != 1:
        v.append(f"exactly one slack node required, found {len(slack_ids)}")
    for s in slack_ids:
        if s not in seen_ids:
            v.append(f"slack node {s!r} does not exist")
        else:
            for ki, iv in enumerate(net.node(s).potential):
                if not iv.is_singleton():
                    v.append(f"slack node {s} potential component {ki} must be a singleton")

    seen_pairs = set()
    has_gas = False
    for e in net.edges:
        name = f"edge {e.frm}-{e.to}"
        for end in (e.frm, e.to):
            if end not in seen_ids:
                v.append(f"{name}: endpoint {end!r} does not exist")
        if e.frm == e.to:
            v.append(f"{name}: self-loops are not allowed")
        pair = frozenset((e.frm, e.to))
        if pair in seen_pairs:
            v.append(f"{name}: duplicate undirected edge")
        seen_pairs.add(pair)
        _check_domains(v, f"{name} flow_domain", e.flow_domain, k)
        v.extend(f"{name}: {msg}" for msg in _physics_issues(e.physics, k))
        has_gas = has_gas or isinstance(e.physics, GasWeymouth)

    if has_gas:
        for n in net.nodes:
            for iv in n.potential:
                if iv.lo < 0:
                    v.append(f"node {n.id}: gas potential (squared pressure) must be nonnegative")
                    break

    for n in net.nodes:
        if n.transform is not None:
            v.extend(_transform_issues(net, n))

    for a in net.aggregators:
        tag = f"aggregator {','.join(a.members)}"
        if len(set(a.members)) < 2:
            v.append(f"{tag}: needs at least two distinct members")
        for m in a.members:
            if m not in seen_ids:
                v.append(f"{tag}: member {m!r} does not exist")
            elif m in slack_ids:
                v.append(f"{tag}: slack node cannot be an aggregator member")
        if a.lower < 0 or a.lower > a.upper:
            v.append(f"{tag}: bounds must satisfy 0 <= lower <= upper")
        if not (0 <= a.component < max(k, 1)):
            v.append(f"{tag}: component index out of range")

    return ValidationReport(ok=not v, violations=tuple(v))


def _check_domains(v, tag, domains, k):
    if len(domains) != k:
        v.append(f"{tag}: expected {k} component interval(s), got {len(domains)}")
    for iv in domains:
        if not (math.isfinite(iv.lo) and math.isfinite(iv.hi)):
            v.append(f"{tag}: interval must be finite")
        elif iv.lo > iv.hi:
            v.append(f"{tag}: empty interval [{iv.lo}, {iv.hi}]")


def _physics_issues(ph, k) -> list[str]:
    out = []
    need = physics_components(ph)
    if need is not None and need != k:
        out.append(f"{ph.kind} physics requires {need} component(s), network has {k}")
    if isinstance(ph, GasWeymouth):
        if ph.gamma <= 0:
            out.append("gas conductance must be positive")
    elif isinstance(ph, (ACPowerVoltage, ACCurrentVoltage)):
        if ph.resistance == 0 and ph.reactance == 0:
            out.append("AC impedance must be nonzero")
    elif isinstance(ph, Dissipative):
        if ph.table:
            out.extend(_table_issues(ph.table, "dissipative table"))
        else:
            if ph.coefficient <= 0:
                out.append("dissipative coefficient must be positive")
            if ph.exponent <= 0:
                out.append("dissipative exponent must be positive")
    elif isinstance(ph, CustomTable):
        out.extend(_table_issues(ph.table, "custom table"))
        if ph.pad < 0:
            out.append("custom table pad must be nonnegative")
    else:
        out.append(f"unknown physics kind {ph!r}")
    return out


def _table_issues(table, tag) -> list[str]:
    out = []
    if len(table) < 2:
        out.append(f"{tag} needs at least two points")
        return out
    xs = [p[0] for p in table]
    ys = [p[1] for p in table]
    if any(b <= a for a, b in zip(xs, xs[1:])):
        out.append(f"{tag} x-values must be strictly increasing")
    if any(b < a for a, b in zip(ys, ys[1:])):
        out.append(f"{tag} must be monotone nondecreasing")
    return out


def _transform_issues(net: Network, n: NodeSpec) -> list[str]:
    out = []
    t = n.transform
    tag = f"node {n.id} transform"
    neighbors = set()
    for e in net.incident(n.id):
        neighbors.add(e.to if e.frm == n.id else e.frm)
    if net.degree(n.id) != 2:
        out.append(f"{tag}: transform nodes must have degree exactly 2")
    if t.in_node == t.out_node or not {t.in_node, t.out_node} <= neighbors:
        out.append(f"{tag}: in/out ports must name the two distinct neighbors")
    k = net.components
    if t.kind == "multiplicative":
        if t.has_decision_ratio():
            if k != 1:
                out.append(f"{tag}: decision ratio only supported for one component")
            elif t.ratio_range.lo <= 0:
                out.append(f"{tag}: compression ratio range must be positive")
        elif k == 2:
            if len(t.coeffs) != 2:
                out.append(f"{tag}: complex coefficient needs [re, im]")
        elif len(t.coeffs) != 1:
            out.append(f"{tag}: multiplicative coefficient needs one entry")
        elif t.coeffs[0] <= 0 and k == 1:
            out.append(f"{tag}: multiplicative compression coefficient must be positive")
    elif t.kind == "additive":
        if len(t.coeffs) != k:
            out.append(f"{tag}: additive offsets must have one entry per component")
    elif t.kind == "tabulated":
        if len(t.tables) != k:
            out.append(f"{tag}: tabulated transform needs one table per component")
        for tab in t.tables:
            out.extend(f"{tag}: {m}" for m in _table_issues(tab, "transform table"))
    else:
        out.append(f"{tag}: unknown transform kind {t.kind!r}")
    return out


# ---------------------------------------------------------------------------
# JSON input format

def load_network(source) -> Network:
    """Build a Network from a dict, JSON text, or a path to a JSON file.

    Top-level keys: ``nodes``, ``edges``, ``slack``, ``components`` plus the
    optional ``objective`` and ``aggregators``.  Intervals are written as
    ``[lo, hi]`` pairs or a bare number for a singleton; per-component fields
    take a list with one entry per component.
    """
    if isinstance(source, dict):
        data = source
    else:
        text = None
        s = str(source)
        if s.lstrip().startswith("{"):
            text = s
        else:
            with open(s, "r", encoding="utf-8") as fh:
                text = fh.read()
        data = json.loads(text)
    if not isinstance(data, dict):
        raise InputError("network document must be a JSON object")
    try:
        k = int(data.get("components", 1))
        nodes = tuple(_parse_node(nd, k) for nd in data.get("nodes", []))
        edges = tuple(_parse_edge(ed, k) for ed in data.get("edges", []))
        aggs = tuple(_parse_aggregator(a) for a in data.get("aggregators", []))
        slack = data.get("slack")
        return Network(
            nodes=nodes,
            edges=edges,
            slack=str(slack) if slack is not None else None,
            components=k,
            objective=str(data.get("objective", "min_cost")),
            aggregators=aggs,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"malformed network document: {exc}") from exc


def _parse_interval(val) -> Interval:
    # permissive on values: empty or non-finite intervals are reported by
    # validate_network, not rejected at parse time
    if isinstance(val, (int, float)):
        return Interval(float(val), float(val))
    if isinstance(val, (list, tuple)) and len(val) == 2:
        return Interval(float(val[0]), float(val[1]))
    raise InputError(f"expected number or [lo, hi], got {val!r}")


def _parse_domains(val, k, what) -> tuple[Interval, ...]:
    if not isinstance(val, (list, tuple)):
        raise InputError(f"{what}: expected a per-component list")
    out = tuple(_parse_interval(entry) for entry in val)
    if len(out) != k:
        raise InputError(f"{what}: expected {k} entries, got {len(out)}")
    return out


def _parse_cost(val) -> CostFunction | None:
    if val is None:
        return None
    kind = val["kind"]
    if kind == "pwl":
        return CostFunction(kind="pwl", points=tuple((float(x), float(y)) for x, y in val["points"]))
    if kind == "abs_dev":
        return CostFunction(kind="abs_dev", coeffs=(float(val["weight"]), float(val["ref"])))
    return CostFunction(kind=kind, coeffs=tuple(float(c) for c in val["coeffs"]))


def _parse_costs(val, k) -> tuple[CostFunction | None, ...]:
    if val is None:
        return (None,) * k
    if isinstance(val, dict):
        return (_parse_cost(val),) + (None,) * (k - 1)
    return tuple(_parse_cost(entry) for entry in val)


def _parse_transform(val) -> TransformSpec:
    kind = val["kind"]
    rng = val.get("ratio_range")
    tables = tuple(
        tuple((float(x), float(y)) for x, y in tab) for tab in val.get("tables", [])
    )
    return TransformSpec(
        kind=kind,
        in_node=str(val["in"]),
        out_node=str(val["out"]),
        coeffs=tuple(float(c) for c in val.get("coeffs", [])),
        tables=tables,
        ratio_range=_parse_interval(rng) if rng is not None else None,
        ratio_cost=_parse_cost(val.get("ratio_cost")),
    )


def _parse_node(nd, k) -> NodeSpec:
    nid = str(nd["id"])
    return NodeSpec(
        id=nid,
        injection=_parse_domains(nd.get("injection", [[0.0, 0.0]] * k), k, f"node {nid} injection"),
        potential=_parse_domains(nd["potential"], k, f"node {nid} potential"),
        costs=_parse_costs(nd.get("cost"), k),
        transform=_parse_transform(nd["transform"]) if nd.get("transform") else None,
        is_slack=bool(nd.get("slack", False)),
    )


def _parse_physics(val):
    kind = val["kind"]
    if kind == "gas":
        return GasWeymouth(gamma=float(val["gamma"]), offset=float(val.get("offset", 0.0)))
    if kind == "ac_power":
        return ACPowerVoltage(resistance=float(val["resistance"]), reactance=float(val["reactance"]))
    if kind == "ac_current":
        return ACCurrentVoltage(resistance=float(val["resistance"]), reactance=float(val["reactance"]))
    if kind == "dissipative":
        table = tuple((float(x), float(y)) for x, y in val.get("table", []))
        return Dissipative(
            coefficient=float(val.get("coefficient", 1.0)),
            exponent=float(val.get("exponent", 1.0)),
            table=table,
        )
    if kind == "custom_table":
        return CustomTable(
            table=tuple((float(x), float(y)) for x, y in val["table"]),
            pad=float(val.get("pad", 0.0)),
        )
    raise InputError(f"unknown physics kind {kind!r}")


def _parse_edge(ed, k) -> EdgeSpec:
    return EdgeSpec(
        frm=str(ed["from"]),
        to=str(ed["to"]),
        physics=_parse_physics(ed["physics"]),
        flow_domain=_parse_domains(ed["flow_domain"], k, f"edge {ed.get('from')}-{ed.get('to')} flow_domain"),
    )


def _parse_aggregator(val) -> AggregatorSpec:
    return AggregatorSpec(
        members=tuple(str(m) for m in val["members"]),
        lower=float(val["lower"]),
        upper=float(val["upper"]),
        component=int(val.get("component", 0)),
    )
