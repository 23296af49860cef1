"""
semgraph.py

Este módulo define el modelo de datos de los grafos semánticos G=(S,R): nodos con nivel
jerárquico y etiquetas de relevancia, relaciones como pares ordenados, y la inducción de
los subgrafos relevantes para una tarea (TOSC/GSC) y perceptuales.

Los grafos son inmutables una vez construidos; todas las operaciones devuelven grafos nuevos.
"""

import json
from dataclasses import dataclass, field

from gsc.errors import GraphValidationError
from utils.logger import log_warning

LEVELS = (1, 2, 3, 4)
NODE_FIELDS = {"id", "label", "level", "tags"}
GRAPH_FIELDS = {"nodes", "relations"}


@dataclass(frozen=True)
class SemanticNode:
    """
    Nodo semántico s ∈ S.

    Atributos:
        id (str): Identificador único dentro del grafo.
        label (str): Nombre legible de la semántica ("shape", "dog", ...).
        level (int): Nivel jerárquico, de 1 (bajo) a 4 (alto).
        tags (frozenset): Etiquetas de relevancia para tareas y percepción.
    """

    id: str
    label: str
    level: int
    tags: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "tags", frozenset(self.tags))


@dataclass(frozen=True)
class SemanticGraph:
    """
    Grafo semántico G=(S,R).

    Atributos:
        nodes (tuple): Nodos en orden de inserción.
        relations (tuple): Pares ordenados (id, id).
        warnings (tuple): Avisos de carga (campos desconocidos), no invariantes.
    """

    nodes: tuple = ()
    relations: tuple = ()
    warnings: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "relations", tuple((a, b) for a, b in self.relations))
        object.__setattr__(self, "warnings", tuple(self.warnings))

    @property
    def node_ids(self):
        return frozenset(n.id for n in self.nodes)

    def node(self, node_id):
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    def same_as(self, other):
        """Igualdad como conjuntos (el orden de nodos y relaciones no importa)."""
        return (set(self.nodes) == set(other.nodes)
                and set(self.relations) == set(other.relations))


@dataclass(frozen=True)
class TaskSpec:
    """
    Tarea en sentido estricto (narrow, T) o general (general, 𝒯) expresada como
    predicados de etiquetas.

    Atributos:
        kind (str): "narrow" o "general".
        objective_labels (frozenset): Etiquetas que hacen a un nodo relevante para la tarea.
        perceptual_labels (frozenset): Etiquetas de la información perceptual.
    """

    kind: str
    objective_labels: frozenset
    perceptual_labels: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "objective_labels", frozenset(self.objective_labels))
        object.__setattr__(self, "perceptual_labels", frozenset(self.perceptual_labels))
        if self.kind not in ("narrow", "general"):
            raise ValueError(f"Tipo de tarea desconocido: {self.kind}")
        if self.kind == "narrow" and len(self.objective_labels) != 1:
            raise ValueError("Una tarea narrow necesita exactamente una etiqueta objetivo.")
        if self.kind == "general" and not self.objective_labels:
            raise ValueError("Una tarea general necesita al menos una etiqueta objetivo.")


def validate_graph(g, include_warnings=True):
    """
    Comprueba los invariantes del grafo.

    Args:
        g (SemanticGraph): Grafo a validar.
        include_warnings (bool): Si se añaden los avisos de carga a la salida.

    Returns:
        list: Descripciones de las violaciones; vacía si el grafo es válido.
    """
    violations = []
    seen = set()
    for n in g.nodes:
        if n.id in seen:
            violations.append(f"duplicate node id {n.id}")
        seen.add(n.id)
        if n.level not in LEVELS:
            violations.append(f"node {n.id} level {n.level} outside [1, 4]")

    seen_edges = set()
    for a, b in g.relations:
        for end in (a, b):
            if end not in seen:
                violations.append(f"relation references unknown node {end}")
        if a == b:
            violations.append(f"self-loop on {a}")
        if (a, b) in seen_edges:
            violations.append(f"duplicate relation ({a}, {b})")
        seen_edges.add((a, b))

    if include_warnings:
        violations.extend(g.warnings)
    return violations


def _require_valid(g):
    violations = validate_graph(g, include_warnings=False)
    if violations:
        raise GraphValidationError(violations)


def induce_subgraph(g, labels):
    """
    Subgrafo inducido por las etiquetas: nodos con alguna etiqueta en ``labels`` y las
    relaciones cuyos dos extremos fueron seleccionados.

    Args:
        g (SemanticGraph): Grafo de partida (debe ser válido).
        labels (set): Etiquetas de selección.

    Returns:
        SemanticGraph: Subgrafo inducido.

    Raises:
        GraphValidationError: Si ``g`` viola algún invariante.
    """
    _require_valid(g)
    labels = frozenset(labels)
    nodes = tuple(n for n in g.nodes if n.tags & labels)
    ids = {n.id for n in nodes}
    relations = tuple((a, b) for a, b in g.relations if a in ids and b in ids)
    return SemanticGraph(nodes, relations)


def task_subgraph(g, t):
    """G_GSC (o G_TOSC si la tarea es narrow): subgrafo de las etiquetas objetivo."""
    return induce_subgraph(g, t.objective_labels)


def perceptual_subgraph(g, t):
    """G*_GSC: subgrafo de la información perceptual."""
    return induce_subgraph(g, t.perceptual_labels)


def is_tosc(t):
    """GSC se reduce a TOSC con una tarea narrow sin información perceptual."""
    return t.kind == "narrow" and not t.perceptual_labels


def graph_union(g1, g2):
    nodes = list(g1.nodes)
    ids = {n.id for n in nodes}
    nodes.extend(n for n in g2.nodes if n.id not in ids)
    existing = set(g1.relations)
    relations = list(g1.relations)
    relations.extend(r for r in g2.relations if r not in existing)
    return SemanticGraph(nodes, relations)


def nodes_at_level(g, level):
    return tuple(n for n in g.nodes if n.level == level)


def load_graph(text):
    """
    Carga un grafo desde JSON con ``nodes: [{id,label,level,tags}]`` y
    ``relations: [[from,to]]``. Los campos desconocidos no abortan la carga: quedan
    como avisos que ``validate_graph`` lista.

    Args:
        text (str): Documento JSON.

    Returns:
        SemanticGraph: Grafo cargado (sin validar).

    Raises:
        GraphValidationError: Si el documento no es JSON o a un nodo le falta
            ``id`` o ``level`` (o no son válidos).
    """
    try:
        data = json.loads(text)
    except ValueError as e:
        raise GraphValidationError([f"JSON inválido: {e}"]) from e
    if not isinstance(data, dict):
        raise GraphValidationError(["el documento no es un objeto"])
    warnings = [f"unknown field {k} in graph" for k in sorted(set(data) - GRAPH_FIELDS)]
    nodes = []
    for i, raw in enumerate(data.get("nodes", [])):
        try:
            node_id = str(raw["id"])
        except (KeyError, TypeError) as e:
            raise GraphValidationError([f"node {i} without id"]) from e
        try:
            level = int(raw["level"])
        except KeyError as e:
            raise GraphValidationError([f"node {node_id} without level"]) from e
        except (TypeError, ValueError) as e:
            raise GraphValidationError([f"node {node_id} has invalid level {raw['level']!r}"]) from e
        warnings.extend(f"unknown field {k} in node {node_id}"
                        for k in sorted(set(raw) - NODE_FIELDS))
        nodes.append(SemanticNode(node_id, str(raw.get("label", node_id)), level,
                                  frozenset(raw.get("tags", []))))
    try:
        relations = [(str(a), str(b)) for a, b in data.get("relations", [])]
    except (TypeError, ValueError) as e:
        raise GraphValidationError([f"malformed relation list: {e}"]) from e
    for w in warnings:
        log_warning(f"Grafo semántico: {w}")
    return SemanticGraph(nodes, relations, warnings)


def dump_graph(g):
    data = {
        "nodes": [{"id": n.id, "label": n.label, "level": n.level, "tags": sorted(n.tags)}
                  for n in g.nodes],
        "relations": [[a, b] for a, b in g.relations],
    }
    return json.dumps(data, indent=4)
