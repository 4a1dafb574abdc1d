"""Design-stage tools: DAG confounder identification and pre-study robustness."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .bounds.evalue import evalue_rr, smd_to_rr
from .model import DEFAULT_ALPHA, ValidationError, t_critical

TREATMENT = "treatment"
OUTCOME = "outcome"
COVARIATE = "covariate"


@dataclass(frozen=True)
class Node:
    name: str
    measured: bool = True
    role: str = COVARIATE


@dataclass(frozen=True)
class Dag:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise ValidationError("duplicate node names")
        for role in (TREATMENT, OUTCOME):
            count = sum(n.role == role for n in self.nodes)
            if count != 1:
                raise ValidationError(f"exactly one {role} node required, found {count}")
        known = set(names)
        seen = set()
        for a, b in self.edges:
            for v in (a, b):
                if v not in known:
                    raise ValidationError(f"edge {a} -> {b} references unknown node {v!r}")
            if a == b:
                raise ValidationError(f"self-edge on {a!r}")
            if (a, b) in seen:
                raise ValidationError(f"duplicate edge {a} -> {b}")
            seen.add((a, b))
        cycle = _find_cycle(names, self.edges)
        if cycle:
            raise ValidationError("cycle: " + " -> ".join(cycle))

    @property
    def treatment(self) -> str:
        return next(n.name for n in self.nodes if n.role == TREATMENT)

    @property
    def outcome(self) -> str:
        return next(n.name for n in self.nodes if n.role == OUTCOME)

    def node(self, name: str) -> Node:
        return next(n for n in self.nodes if n.name == name)

    def children(self, name: str) -> list[str]:
        return [b for a, b in self.edges if a == name]

    def parents(self, name: str) -> list[str]:
        return [a for a, b in self.edges if b == name]

    def ancestors(self, name: str, blocked: frozenset[str] = frozenset()) -> set[str]:
        """Nodes with a directed path into ``name`` that avoids ``blocked``."""
        out: set[str] = set()
        stack = [name]
        while stack:
            v = stack.pop()
            for p in self.parents(v):
                if p not in out and p not in blocked:
                    out.add(p)
                    stack.append(p)
        return out

    def to_text(self) -> str:
        lines = []
        for n in self.nodes:
            parts = ["node", n.name]
            if not n.measured:
                parts.append("unmeasured")
            if n.role != COVARIATE:
                parts.append(n.role)
            lines.append(" ".join(parts))
        lines += [f"edge {a} -> {b}" for a, b in self.edges]
        return "\n".join(lines) + "\n"


def _find_cycle(names, edges) -> list[str] | None:
    adj = {n: [] for n in names}
    for a, b in edges:
        adj[a].append(b)
    color = dict.fromkeys(names, 0)
    stack_path: list[str] = []

    def visit(v):
        color[v] = 1
        stack_path.append(v)
        for w in adj[v]:
            if color[w] == 1:
                return stack_path[stack_path.index(w):] + [w]
            if color[w] == 0:
                found = visit(w)
                if found:
                    return found
        stack_path.pop()
        color[v] = 2
        return None

    for n in names:
        if color[n] == 0:
            found = visit(n)
            if found:
                return found
    return None


def parse_dag(text: str) -> Dag:
    """Parse the line format ``node <name> [unmeasured] [treatment|outcome]`` / ``edge <a> -> <b>``.

    Blank lines and ``#`` comments are ignored.
    """
    nodes: list[Node] = []
    edges: list[tuple[str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if tok[0] == "node":
            if len(tok) < 2:
                raise ValidationError(f"line {lineno}: node needs a name")
            measured, role = True, COVARIATE
            for flag in tok[2:]:
                if flag == "unmeasured":
                    measured = False
                elif flag in (TREATMENT, OUTCOME):
                    if role != COVARIATE:
                        raise ValidationError(f"line {lineno}: node {tok[1]!r} has two roles")
                    role = flag
                else:
                    raise ValidationError(f"line {lineno}: unknown node flag {flag!r}")
            nodes.append(Node(tok[1], measured, role))
        elif tok[0] == "edge":
            if len(tok) != 4 or tok[2] != "->":
                raise ValidationError(f"line {lineno}: expected 'edge <from> -> <to>'")
            edges.append((tok[1], tok[3]))
        else:
            raise ValidationError(f"line {lineno}: unknown statement {tok[0]!r}")
    return Dag(tuple(nodes), tuple(edges))


def classify_confounders(dag: Dag) -> dict[str, list[str]]:
    """Split covariate nodes into measured confounders, unmeasured confounders and the rest.

    A confounder is an ancestor of the treatment that also reaches the outcome
    along a directed path that does not pass through the treatment.
    """
    z, y = dag.treatment, dag.outcome
    anc_z = dag.ancestors(z)
    anc_y = dag.ancestors(y, blocked=frozenset({z}))
    out = {"measured_confounders": [], "unmeasured_confounders": [], "non_confounders": []}
    for n in dag.nodes:
        if n.role != COVARIATE:
            continue
        if n.name in anc_z and n.name in anc_y:
            out["measured_confounders" if n.measured else "unmeasured_confounders"].append(n.name)
        else:
            out["non_confounders"].append(n.name)
    for v in out.values():
        v.sort()
    return out


# ---------------------------------------------------------------------------
# Pre-study E-values


@dataclass(frozen=True)
class PrestudyEValue:
    expected_d: float
    d_lower: float
    e_point: float
    e_lcl: float
    n_treated: int
    n_control: int
    alpha: float
    sd: float | None = None

    def to_dict(self) -> dict:
        return {"expected_d": self.expected_d, "d_lower": self.d_lower,
                "e_point": self.e_point, "e_lcl": self.e_lcl,
                "n_treated": self.n_treated, "n_control": self.n_control,
                "alpha": self.alpha, "sd": self.sd}


def prestudy_evalue(expected_d: float, n_treated: int, n_control: int,
                    alpha: float = DEFAULT_ALPHA, sd: float | None = None) -> PrestudyEValue:
    """E-values for an anticipated standardized effect and its expected lower limit.

    The lower limit is ``d - t * sqrt(1/n1 + 1/n0)``.  ``sd`` is only recorded
    so the report can state the raw-scale effect (``d * sd``).
    """
    if n_treated < 2 or n_control < 2:
        raise ValidationError("each arm needs at least 2 subjects")
    if sd is not None and not sd > 0:
        raise ValidationError("sd must be positive")
    d = abs(float(expected_d))
    df = n_treated + n_control - 2
    d_lower = d - t_critical(alpha, df) * math.sqrt(1.0 / n_treated + 1.0 / n_control)
    e_point = evalue_rr(smd_to_rr(d))
    e_lcl = 1.0 if d_lower <= 0 else evalue_rr(smd_to_rr(d_lower))
    return PrestudyEValue(d, d_lower, e_point, e_lcl, n_treated, n_control, alpha, sd)


@dataclass(frozen=True)
class SampleSizeResult:
    feasible: bool
    n_control: int | None
    n_treated: int | None
    e_lcl: float | None
    e_point: float
    message: str = ""

    def to_dict(self) -> dict:
        return {"feasible": self.feasible, "n_control": self.n_control,
                "n_treated": self.n_treated, "e_lcl": self.e_lcl,
                "e_point": self.e_point, "message": self.message}


def required_n_for_robustness(expected_d: float, target_e_lcl: float,
                              alpha: float = DEFAULT_ALPHA, allocation_ratio: float = 1.0,
                              n_max: int = 10 ** 9) -> SampleSizeResult:
    """Smallest control-arm size whose expected lower-limit E-value reaches the target.

    The treated arm has ``ceil(allocation_ratio * n_control)`` subjects.
    """
    if not target_e_lcl > 1:
        raise ValidationError("target_e_lcl must exceed 1")
    if not expected_d > 0:
        raise ValidationError("expected_d must be positive")
    if not allocation_ratio > 0:
        raise ValidationError("allocation_ratio must be positive")
    e_point = evalue_rr(smd_to_rr(expected_d))
    if target_e_lcl >= e_point:
        return SampleSizeResult(False, None, None, None, e_point,
                                "target is not below the point-estimate E-value; unreachable at any n")

    def arms(n0):
        return max(2, math.ceil(allocation_ratio * n0)), n0

    def e_at(n0):
        n1, n0 = arms(n0)
        return prestudy_evalue(expected_d, n1, n0, alpha).e_lcl

    lo, hi = 2, 4
    while e_at(hi) < target_e_lcl:
        lo, hi = hi, hi * 2
        if hi > n_max:
            return SampleSizeResult(False, None, None, None, e_point,
                                    f"target not reached below n = {n_max}")
    if e_at(lo) >= target_e_lcl:
        hi = lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if e_at(mid) >= target_e_lcl:
            hi = mid
        else:
            lo = mid
    n1, n0 = arms(hi)
    return SampleSizeResult(True, n0, n1, e_at(hi), e_point)
