from __future__ import annotations

import random

import pytest

from rwesens.design import (COVARIATE, OUTCOME, TREATMENT, Dag, Node, classify_confounders,
                            parse_dag, prestudy_evalue, required_n_for_robustness)
from rwesens.model import ValidationError

PILOT_DAG = """
# pilot DAG: one measured and one unmeasured confounder
node X
node U unmeasured
node Z treatment
node Y outcome
edge X -> Z
edge X -> Y
edge U -> Z
edge U -> Y
edge Z -> Y
"""


def test_pilot_dag():
    dag = parse_dag(PILOT_DAG)
    assert len(dag.edges) == 5
    assert classify_confounders(dag) == {"measured_confounders": ["X"],
                                         "unmeasured_confounders": ["U"],
                                         "non_confounders": []}


def test_mediator_is_not_confounder():
    dag = parse_dag("node Z treatment\nnode Y outcome\nnode M\nedge Z -> M\nedge M -> Y\n")
    assert classify_confounders(dag)["non_confounders"] == ["M"]


def test_cycle_is_named():
    text = "node Z treatment\nnode Y outcome\nnode A\nnode B\nedge A -> B\nedge B -> A\n"
    with pytest.raises(ValidationError, match="cycle") as exc:
        parse_dag(text)
    assert "A" in str(exc.value) and "B" in str(exc.value)


@pytest.mark.parametrize("text,msg", [
    ("node Z treatment\nnode W treatment\nnode Y outcome\n", "exactly one treatment"),
    ("node Z treatment\nnode Y outcome\nedge Z -> Q\n", "unknown node"),
    ("node Z treatment\nnode Y outcome\nedge Z -> Z\n", "self-edge"),
    ("node Z treatment\nnode Y outcome\nedge Z -> Y\nedge Z -> Y\n", "duplicate edge"),
    ("node Z treatment\nnode Y outcome\nvertex Q\n", "unknown statement"),
])
def test_dag_errors(text, msg):
    with pytest.raises(ValidationError, match=msg):
        parse_dag(text)


def _all_paths(edges, src, dst):
    """Every simple directed path from src to dst, by exhaustive enumeration."""
    out = []

    def go(v, path):
        if v == dst:
            out.append(path)
            return
        for a, b in edges:
            if a == v and b not in path:
                go(b, path + [b])

    go(src, [src])
    return out


def _oracle(dag: Dag):
    z, y = dag.treatment, dag.outcome
    res = {"measured_confounders": [], "unmeasured_confounders": [], "non_confounders": []}
    for n in dag.nodes:
        if n.role != COVARIATE:
            continue
        to_z = bool(_all_paths(dag.edges, n.name, z))
        to_y = any(z not in p for p in _all_paths(dag.edges, n.name, y))
        key = ("measured_confounders" if n.measured else "unmeasured_confounders") \
            if to_z and to_y else "non_confounders"
        res[key].append(n.name)
    return {k: sorted(v) for k, v in res.items()}


def random_dag(rng: random.Random, max_nodes: int = 8) -> Dag:
    k = rng.randint(3, max_nodes)
    names = [f"n{i}" for i in range(k)]
    rng.shuffle(names)  # names[i] precedes names[j] for i < j
    zi, yi = sorted(rng.sample(range(k), 2))
    nodes = []
    for i, name in enumerate(names):
        role = TREATMENT if i == zi else OUTCOME if i == yi else COVARIATE
        nodes.append(Node(name, measured=rng.random() > 0.3, role=role))
    edges = [(names[i], names[j]) for i in range(k) for j in range(i + 1, k)
             if rng.random() < 0.35]
    return Dag(tuple(nodes), tuple(edges))


def test_random_dags_match_path_enumeration():
    rng = random.Random(11)
    for _ in range(100):
        dag = random_dag(rng, 8)
        assert classify_confounders(dag) == _oracle(dag)


def test_to_text_round_trip():
    dag = parse_dag(PILOT_DAG)
    assert parse_dag(dag.to_text()) == dag


def test_prestudy_values():
    pre = prestudy_evalue(0.25, 200, 400, sd=1.2)
    assert pre.e_point == pytest.approx(1.82, abs=0.01)
    assert 1.25 <= pre.e_lcl <= 1.40
    null = prestudy_evalue(0.0, 200, 400)
    assert null.e_point == 1.0 and null.e_lcl == 1.0
    big = prestudy_evalue(0.25, 10 ** 6, 10 ** 6)
    assert abs(big.e_lcl - big.e_point) < 0.01
    with pytest.raises(ValidationError):
        prestudy_evalue(0.25, 1, 400)


def test_required_n():
    # a large anticipated effect clears the null with a handful of subjects
    weak = required_n_for_robustness(2.0, 1.0 + 1e-6)
    assert weak.feasible and weak.n_control <= 10
    res = required_n_for_robustness(0.25, 1.5)
    assert res.feasible and res.e_lcl >= 1.5
    below = prestudy_evalue(0.25, res.n_control - 1, res.n_control - 1)
    assert below.e_lcl < 1.5
    unequal = required_n_for_robustness(0.25, 1.5, allocation_ratio=0.5)
    assert unequal.n_treated == -(-unequal.n_control // 2)
    infeasible = required_n_for_robustness(0.25, 2.0)
    assert not infeasible.feasible and "unreachable" in infeasible.message
