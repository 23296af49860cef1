import itertools
import os

import pytest

from gsc.errors import GraphValidationError
from gsc.semgraph import (SemanticGraph, SemanticNode, TaskSpec, dump_graph, graph_union, induce_subgraph,
                          is_tosc, load_graph, nodes_at_level, perceptual_subgraph, task_subgraph,
                          validate_graph)

DATA = os.path.join(os.path.dirname(__file__), "..", "data")


def perro():
    nodes = [SemanticNode("dog", "dog", 2, {"object"}), SemanticNode("shape", "shape", 1, {"shape"}),
             SemanticNode("color", "color", 1, {"color"}), SemanticNode("emotion", "emotion", 4, {"emotion"})]
    ids = [n.id for n in nodes]
    return SemanticGraph(nodes, list(itertools.permutations(ids, 2)))


def test_validate_graph_casos_basicos():
    assert validate_graph(perro()) == []
    roto = SemanticGraph([SemanticNode("a", "a", 1)], [("a", "x")])
    assert validate_graph(roto) == ["relation references unknown node x"]
    lazo = SemanticGraph([SemanticNode("a", "a", 1)], [("a", "a")])
    assert validate_graph(lazo) == ["self-loop on a"]


def test_validate_graph_duplicados_y_nivel():
    g = SemanticGraph([SemanticNode("a", "a", 1), SemanticNode("a", "b", 5), SemanticNode("c", "c", 2)],
                      [("a", "c"), ("a", "c")])
    violations = validate_graph(g)
    assert "duplicate node id a" in violations
    assert "node a level 5 outside [1, 4]" in violations
    assert "duplicate relation (a, c)" in violations


def test_induce_subgraph_filtra_nodos_y_aristas():
    g = perro()
    sub = induce_subgraph(g, {"object", "shape", "color"})
    assert sub.node_ids == {"dog", "shape", "color"}
    expected = {(a, b) for a, b in g.relations if a in sub.node_ids and b in sub.node_ids}
    assert set(sub.relations) == expected
    assert validate_graph(sub) == []


def test_induce_subgraph_vacio_y_completo():
    g = perro()
    assert induce_subgraph(g, set()).nodes == ()
    todos = set().union(*(n.tags for n in g.nodes))
    assert induce_subgraph(g, todos).same_as(g)


def test_induce_subgraph_idempotente_y_monotono():
    g = perro()
    l1, l2 = {"object"}, {"object", "emotion"}
    once = induce_subgraph(g, l1)
    assert induce_subgraph(once, l1).same_as(once)
    big = induce_subgraph(g, l2)
    assert once.node_ids <= big.node_ids
    assert set(once.relations) <= set(big.relations)


def test_induce_subgraph_rechaza_grafo_invalido():
    with pytest.raises(GraphValidationError):
        induce_subgraph(SemanticGraph([SemanticNode("a", "a", 1)], [("a", "a")]), {"x"})


def test_task_spec_invariantes():
    with pytest.raises(ValueError):
        TaskSpec("narrow", {"object", "shape"})
    with pytest.raises(ValueError):
        TaskSpec("general", set())
    with pytest.raises(ValueError):
        TaskSpec("amplia", {"object"})


def test_subgrafos_de_tarea_y_perceptual():
    g = perro()
    narrow = TaskSpec("narrow", {"object"})
    assert task_subgraph(g, narrow).node_ids == {"dog"}
    assert perceptual_subgraph(g, narrow).nodes == ()
    assert is_tosc(narrow)

    general = TaskSpec("general", {"object", "shape"}, {"shape", "color"})
    task = task_subgraph(g, general)
    perceptual = perceptual_subgraph(g, general)
    assert not is_tosc(general)
    assert task.node_ids & perceptual.node_ids == {"shape"}
    assert graph_union(task, perceptual).node_ids == {"dog", "shape", "color"}


def test_json_ida_y_vuelta_y_avisos():
    g = perro()
    assert load_graph(dump_graph(g)).same_as(g)
    g2 = load_graph('{"nodes": [{"id": "a", "level": 1, "peso": 3}], "relations": []}')
    assert validate_graph(g2) == ["unknown field peso in node a"]
    assert validate_graph(g2, include_warnings=False) == []


def test_json_mal_formado_es_error_de_grafo():
    with pytest.raises(GraphValidationError, match="node a without level"):
        load_graph('{"nodes": [{"id": "a"}], "relations": []}')
    with pytest.raises(GraphValidationError, match="node 1 without id"):
        load_graph('{"nodes": [{"id": "a", "level": 1}, {"level": 2}]}')
    with pytest.raises(GraphValidationError, match="invalid level"):
        load_graph('{"nodes": [{"id": "a", "level": "alto"}]}')
    with pytest.raises(GraphValidationError):
        load_graph("{no es json")


def test_grafo_del_perro_en_data():
    with open(os.path.join(DATA, "grafo_perro.json"), encoding="utf-8") as f:
        g = load_graph(f.read())
    assert validate_graph(g) == []
    assert {n.id for n in nodes_at_level(g, 4)} == {"calma"}
    t = TaskSpec("general", {"object", "relation"}, {"perceptual"})
    union = graph_union(task_subgraph(g, t), perceptual_subgraph(g, t))
    assert {"perro", "arbol", "debajo", "forma", "color", "parque"} <= union.node_ids
