"""Electrical graph construction, netlist reduction, comparison, export.

Non-wire polygons become typed nodes; wire polygons become edges whose
keypoints are matched geometrically to node terminals. Junction nodes
merge every attached wire into one net; crossover nodes pair their wires
by opposing approach heading and never merge across the pair boundary;
text nodes stay in the graph but carry no nets.
"""

from __future__ import annotations

import json
import math
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .annotations import (
    CROSSOVER_CLASS,
    JUNCTION_CLASS,
    Port,
    TEXT_CLASS,
    WIRE_CLASS,
)
from .errors import SchemaError
from .geometry import Point, Polygon, border_distance, iou

DEFAULT_TOLERANCE = 10.0


class NodeKind(str, Enum):
    SYMBOL = "symbol"
    JUNCTION = "junction"
    CROSSOVER = "crossover"
    TEXT = "text"


def kind_of_label(label: str) -> NodeKind:
    if label == JUNCTION_CLASS:
        return NodeKind.JUNCTION
    if label == CROSSOVER_CLASS:
        return NodeKind.CROSSOVER
    if label == TEXT_CLASS:
        return NodeKind.TEXT
    return NodeKind.SYMBOL


@dataclass(frozen=True)
class Node:
    id: int
    kind: NodeKind
    label: str
    outline: Polygon
    ports: tuple[Port, ...] = ()


@dataclass(frozen=True)
class Endpoint:
    """Where one wire keypoint landed: a named terminal, an anonymous
    outline contact, or dangling."""

    kind: str  # "port" | "contact" | "dangling"
    point: Point
    node_id: int | None = None
    port: str | None = None

    @property
    def terminal(self) -> tuple[int, str] | None:
        if self.kind == "dangling":
            return None
        return (self.node_id, self.port)


@dataclass(frozen=True)
class WireEdge:
    wire_id: int
    endpoints: tuple[Endpoint, ...]


@dataclass
class CircuitGraph:
    nodes: list[Node]
    edges: list[WireEdge]

    def node_by_id(self, node_id: int) -> Node:
        return self._index()[node_id]

    def _index(self) -> dict[int, Node]:
        idx = self.__dict__.get("_idx")
        if idx is None:
            idx = {n.id: n for n in self.nodes}
            self.__dict__["_idx"] = idx
        return idx


@dataclass
class BuildReport:
    dangling: list[dict] = field(default_factory=list)
    contacts: list[dict] = field(default_factory=list)
    unpaired_crossovers: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"dangling": self.dangling, "contacts": self.contacts,
                "unpaired_crossovers": self.unpaired_crossovers}


Terminal = tuple[int, str]


@dataclass
class Netlist:
    """Disjoint nets of symbol terminals; single-terminal nets are opens."""

    nets: list[frozenset[Terminal]]
    opens: list[Terminal]
    unpaired_crossovers: list[dict] = field(default_factory=list)

    def as_partition(self) -> set[frozenset[Terminal]]:
        return set(self.nets)


def build_graph(polygons, assignments, wire_kps, tolerance: float = DEFAULT_TOLERANCE):
    """Assemble the circuit graph from refined polygons and keypoints.

    ``polygons`` is the full per-image annotation list (ids are list
    indices); ``assignments`` maps polygon index -> PortAssignment for
    symbol nodes; ``wire_kps`` maps wire polygon index -> keypoint list.

    Each wire keypoint matches the nearest node terminal within
    ``tolerance``; failing that, the nearest non-wire, non-text outline
    within ``tolerance`` as an anonymous contact; otherwise it dangles.
    Ties break to the smaller node id, then the lexicographically
    smaller port name. Returns (graph, build report).
    """
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")
    nodes: list[Node] = []
    for idx, ann in enumerate(polygons):
        if ann.label == WIRE_CLASS:
            continue
        kind = kind_of_label(ann.label)
        if kind is NodeKind.TEXT:
            ports: tuple[Port, ...] = ()
        elif kind in (NodeKind.JUNCTION, NodeKind.CROSSOVER):
            cx, cy = ann.outline.centroid()
            ports = (Port("center", cx, cy),)
        else:
            assignment = assignments.get(idx)
            ports = assignment.pairs if assignment is not None else ()
        nodes.append(Node(idx, kind, ann.label, ann.outline, ports))

    # candidate terminals, pre-sorted for deterministic tie-breaking
    candidates: list[tuple[int, str, Point, NodeKind]] = []
    for node in nodes:
        if node.kind is NodeKind.TEXT:
            continue
        for port in node.ports:
            candidates.append((node.id, port.name, port.point, node.kind))
    candidates.sort(key=lambda t: (t[0], t[1]))

    contact_counter: dict[int, int] = {}
    crossover_counter: dict[int, int] = {}
    report = BuildReport()
    edges: list[WireEdge] = []
    matchable_nodes = [n for n in nodes if n.kind is not NodeKind.TEXT]
    for idx, ann in enumerate(polygons):
        if ann.label != WIRE_CLASS:
            continue
        endpoints = []
        for kp in wire_kps.get(idx, ()):  # keypoints already in border order
            best = None
            for node_id, name, point, kind in candidates:
                d = math.hypot(kp[0] - point[0], kp[1] - point[1])
                if d <= tolerance and (best is None or d < best[0]):
                    best = (d, node_id, name, kind)
            if best is not None:
                _, node_id, name, kind = best
                if kind is NodeKind.CROSSOVER:
                    # one synthetic terminal per attachment; pairing happens
                    # at netlist time
                    k = crossover_counter.get(node_id, 0)
                    crossover_counter[node_id] = k + 1
                    name = f"pass{k}"
                endpoints.append(Endpoint("port", kp, node_id, name))
                continue
            touch = None
            for node in matchable_nodes:
                d = border_distance(node.outline, kp)
                if d <= tolerance and (touch is None or d < touch[0]):
                    touch = (d, node.id)
            if touch is not None:
                node_id = touch[1]
                k = contact_counter.get(node_id, 0)
                contact_counter[node_id] = k + 1
                name = f"contact{k}"
                endpoints.append(Endpoint("contact", kp, node_id, name))
                report.contacts.append({"wire": idx, "node": node_id,
                                        "point": [kp[0], kp[1]]})
            else:
                endpoints.append(Endpoint("dangling", kp))
                report.dangling.append({"wire": idx, "point": [kp[0], kp[1]]})
        edges.append(WireEdge(idx, tuple(endpoints)))
    return CircuitGraph(nodes, edges), report


class _DSU:
    def __init__(self):
        self.parent: dict = {}

    def add(self, x) -> None:
        self.parent.setdefault(x, x)

    def find(self, x):
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a, b) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # deterministic root: smaller tuple wins
            lo, hi = (ra, rb) if ra <= rb else (rb, ra)
            self.parent[hi] = lo


def _heading_deg(kp: Point, center: Point) -> float:
    return math.degrees(math.atan2(center[1] - kp[1], center[0] - kp[0])) % 360.0


def to_netlist(g: CircuitGraph) -> Netlist:
    """Union-find reduction of the graph into nets of symbol terminals.

    Every wire merges all its matched endpoints; junctions merge through
    their shared center terminal; crossovers pair attached wires whose
    approach headings are closest to opposite, merging only within pairs.
    An odd wire at a crossover is reported and left unmerged.
    """
    dsu = _DSU()
    symbol_terminals: set[Terminal] = set()
    for node in g.nodes:
        for port in node.ports:
            term = (node.id, port.name)
            dsu.add(term)
            if node.kind is NodeKind.SYMBOL:
                symbol_terminals.add(term)
    crossover_hits: dict[int, list[tuple[Terminal, Point]]] = {}
    kinds = {n.id: n.kind for n in g.nodes}
    centers = {n.id: n.outline.centroid() for n in g.nodes}
    for edge in g.edges:
        terms = []
        for ep in edge.endpoints:
            term = ep.terminal
            if term is None:
                continue
            dsu.add(term)
            if kinds[ep.node_id] is NodeKind.SYMBOL:
                symbol_terminals.add(term)
            elif kinds[ep.node_id] is NodeKind.CROSSOVER:
                crossover_hits.setdefault(ep.node_id, []).append((term, ep.point))
            terms.append(term)
        for other in terms[1:]:
            dsu.union(terms[0], other)

    unpaired = []
    for node_id in sorted(crossover_hits):
        hits = crossover_hits[node_id]
        center = centers[node_id]
        remaining = list(range(len(hits)))
        headings = [_heading_deg(p, center) for _, p in hits]
        while len(remaining) >= 2:
            best = None
            for ai in range(len(remaining)):
                for bi in range(ai + 1, len(remaining)):
                    i, j = remaining[ai], remaining[bi]
                    d = abs(headings[i] - headings[j]) % 360.0
                    d = min(d, 360.0 - d)
                    key = (180.0 - d, i, j)
                    if best is None or key < best:
                        best = key
                        pick = (ai, bi)
            ai, bi = pick
            i, j = remaining[ai], remaining[bi]
            dsu.union(hits[i][0], hits[j][0])
            del remaining[bi], remaining[ai]
        if remaining:
            i = remaining[0]
            unpaired.append({"crossover": node_id, "terminal": list(hits[i][0]),
                             "heading": headings[i]})

    groups: dict[Terminal, set[Terminal]] = {}
    for term in dsu.parent:
        groups.setdefault(dsu.find(term), set()).add(term)
    nets: list[frozenset[Terminal]] = []
    opens: list[Terminal] = []
    for members in groups.values():
        symbols = frozenset(t for t in members if t in symbol_terminals)
        if len(symbols) >= 2:
            nets.append(symbols)
        elif len(symbols) == 1:
            opens.append(next(iter(symbols)))
    nets.sort(key=lambda net: sorted(_terminal_str(t) for t in net))
    opens.sort(key=_terminal_str)
    return Netlist(nets, opens, unpaired)


def _terminal_str(term: Terminal) -> str:
    return f"{term[0]}:{term[1]}"


# ---------------------------------------------------------------------------
# comparison
# ---------------------------------------------------------------------------

@dataclass
class GraphMetrics:
    node_precision: float
    node_recall: float
    node_f1: float
    per_class: dict[str, dict[str, float]]
    edge_precision: float
    edge_recall: float
    edge_f1: float
    net_precision: float
    net_recall: float
    net_f1: float

    def to_dict(self) -> dict:
        return {
            "nodes": {"precision": self.node_precision, "recall": self.node_recall,
                      "f1": self.node_f1, "per_class": self.per_class},
            "edges": {"precision": self.edge_precision, "recall": self.edge_recall,
                      "f1": self.edge_f1},
            "nets": {"precision": self.net_precision, "recall": self.net_recall,
                     "f1": self.net_f1},
        }


def _prf(tp: int, npred: int, ngt: int) -> tuple[float, float, float]:
    p = tp / npred if npred else 0.0
    r = tp / ngt if ngt else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    if npred == 0 and ngt == 0:
        return 1.0, 1.0, 1.0
    return p, r, f1


def _class_key(node: Node) -> str:
    return node.label


def _node_degree(g: CircuitGraph, node_id: int) -> int:
    deg = 0
    for edge in g.edges:
        for ep in edge.endpoints:
            if ep.node_id == node_id:
                deg += 1
    return deg


def compare_graphs(a: CircuitGraph, b: CircuitGraph, mode: str = "geometric",
                   frame: tuple[int, int] | None = None) -> GraphMetrics:
    """Node/edge/net precision-recall of graph ``a`` against reference ``b``.

    ``geometric`` mode matches same-class nodes greedily by outline IoU
    (graphs from the same image); ``degree`` mode matches by (class,
    electrical degree) buckets for cross-drawing comparison, where no
    geometric alignment exists.
    """
    if mode not in ("geometric", "degree"):
        raise ValueError(f"unknown comparison mode {mode!r}")
    node_map: dict[int, int] = {}
    if mode == "geometric":
        if frame is None:
            xs, ys = [1.0], [1.0]
            for g in (a, b):
                for n in g.nodes:
                    bb = n.outline.bounds()
                    xs.append(bb.xmax)
                    ys.append(bb.ymax)
            frame = (int(math.ceil(max(xs))), int(math.ceil(max(ys))))
        width, height = frame
        cand = []
        for na in a.nodes:
            for nb in b.nodes:
                if _class_key(na) != _class_key(nb):
                    continue
                score = iou(na.outline, nb.outline, width, height)
                if score > 0:
                    cand.append((score, na.id, nb.id))
        cand.sort(key=lambda t: (-t[0], t[1], t[2]))
        used_a, used_b = set(), set()
        for score, ia, ib in cand:
            if ia in used_a or ib in used_b:
                continue
            used_a.add(ia)
            used_b.add(ib)
            node_map[ia] = ib
        per_class_counts: dict[str, list[int]] = {}
        for n in a.nodes:
            per_class_counts.setdefault(_class_key(n), [0, 0, 0])[1] += 1
        for n in b.nodes:
            per_class_counts.setdefault(_class_key(n), [0, 0, 0])[2] += 1
        ids_b = {n.id: n for n in b.nodes}
        for ia, ib in node_map.items():
            per_class_counts[_class_key(ids_b[ib])][0] += 1
        tp = len(node_map)
    else:
        buckets_a: dict[tuple[str, int], int] = {}
        buckets_b: dict[tuple[str, int], int] = {}
        for n in a.nodes:
            buckets_a[(_class_key(n), _node_degree(a, n.id))] = \
                buckets_a.get((_class_key(n), _node_degree(a, n.id)), 0) + 1
        for n in b.nodes:
            buckets_b[(_class_key(n), _node_degree(b, n.id))] = \
                buckets_b.get((_class_key(n), _node_degree(b, n.id)), 0) + 1
        tp = sum(min(cnt, buckets_b.get(key, 0)) for key, cnt in buckets_a.items())
        per_class_counts = {}
        for n in a.nodes:
            per_class_counts.setdefault(_class_key(n), [0, 0, 0])[1] += 1
        for n in b.nodes:
            per_class_counts.setdefault(_class_key(n), [0, 0, 0])[2] += 1
        per_key = {}
        for key, cnt in buckets_a.items():
            per_key[key[0]] = per_key.get(key[0], 0) + min(cnt, buckets_b.get(key, 0))
        for cls, m in per_key.items():
            per_class_counts[cls][0] = m

    node_p, node_r, node_f1 = _prf(tp, len(a.nodes), len(b.nodes))
    per_class = {}
    for cls, (m, na, nb) in sorted(per_class_counts.items()):
        p, r, f1 = _prf(m, na, nb)
        per_class[cls] = {"precision": p, "recall": r, "f1": f1}

    def edge_signature(g: CircuitGraph, edge: WireEdge, translate: bool):
        sig = []
        for ep in edge.endpoints:
            if ep.terminal is None:
                continue
            nid = ep.node_id
            if translate:
                if nid not in node_map:
                    return None
                nid = node_map[nid]
            sig.append((nid, ep.port))
        return tuple(sorted(sig))

    if mode == "geometric":
        sigs_a = [edge_signature(a, e, True) for e in a.edges]
        sigs_b = [edge_signature(b, e, False) for e in b.edges]
    else:
        labels_a = {n.id: _class_key(n) for n in a.nodes}
        labels_b = {n.id: _class_key(n) for n in b.nodes}
        sigs_a = [tuple(sorted(labels_a[ep.node_id] for ep in e.endpoints
                               if ep.terminal is not None)) for e in a.edges]
        sigs_b = [tuple(sorted(labels_b[ep.node_id] for ep in e.endpoints
                               if ep.terminal is not None)) for e in b.edges]
    remaining = list(sigs_b)
    edge_tp = 0
    for sig in sigs_a:
        if sig is not None and sig in remaining:
            remaining.remove(sig)
            edge_tp += 1
    edge_p, edge_r, edge_f1 = _prf(edge_tp, len(a.edges), len(b.edges))

    net_a = to_netlist(a)
    net_b = to_netlist(b)
    nets_a = net_a.nets
    if mode == "geometric":
        translated = []
        for net in nets_a:
            t = {(node_map[n], p) for n, p in net if n in node_map}
            translated.append(frozenset(t))
        nets_a = translated
    remaining_nets = list(net_b.nets)
    net_tp = 0
    for net in nets_a:
        if net in remaining_nets:
            remaining_nets.remove(net)
            net_tp += 1
    net_p, net_r, net_f1 = _prf(net_tp, len(nets_a), len(net_b.nets))
    return GraphMetrics(node_p, node_r, node_f1, per_class,
                        edge_p, edge_r, edge_f1, net_p, net_r, net_f1)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

def export_graph_json(g: CircuitGraph) -> dict:
    """Lossless canonical JSON document (round-trips via graph_from_json)."""
    nodes = []
    for n in sorted(g.nodes, key=lambda n: n.id):
        nodes.append({
            "id": n.id,
            "kind": n.kind.value,
            "label": n.label,
            "outline": [[float(x), float(y)] for x, y in n.outline.vertices],
            "ports": [{"name": p.name, "x": p.x, "y": p.y} for p in n.ports],
        })
    edges = []
    for e in sorted(g.edges, key=lambda e: e.wire_id):
        eps = [_endpoint_to_dict(ep) for ep in e.endpoints]
        edges.append({
            "wire_id": e.wire_id,
            "endpoint_a": eps[0] if eps else None,
            "endpoint_b": eps[1] if len(eps) > 1 else None,
            "extra_endpoints": eps[2:],
        })
    return {"schema_version": 1, "nodes": nodes, "edges": edges}


def _endpoint_to_dict(ep: Endpoint) -> dict:
    out = {"kind": ep.kind, "point": [ep.point[0], ep.point[1]]}
    if ep.kind != "dangling":
        out["node"] = ep.node_id
        out["port"] = ep.port
    return out


def _endpoint_from_dict(doc: dict) -> Endpoint:
    point = (float(doc["point"][0]), float(doc["point"][1]))
    if doc["kind"] == "dangling":
        return Endpoint("dangling", point)
    return Endpoint(doc["kind"], point, int(doc["node"]), str(doc["port"]))


def graph_from_json(doc: dict) -> CircuitGraph:
    if doc.get("schema_version") != 1:
        raise SchemaError(f"unsupported graph schema_version {doc.get('schema_version')!r}")
    nodes = []
    for nd in doc["nodes"]:
        nodes.append(Node(int(nd["id"]), NodeKind(nd["kind"]), nd["label"],
                          Polygon(np.asarray(nd["outline"], np.float64)),
                          tuple(Port(p["name"], float(p["x"]), float(p["y"]))
                                for p in nd["ports"])))
    edges = []
    for ed in doc["edges"]:
        eps = []
        for key in ("endpoint_a", "endpoint_b"):
            if ed.get(key) is not None:
                eps.append(_endpoint_from_dict(ed[key]))
        eps.extend(_endpoint_from_dict(x) for x in ed.get("extra_endpoints", []))
        edges.append(WireEdge(int(ed["wire_id"]), tuple(eps)))
    return CircuitGraph(nodes, edges)


def export_graphml(g: CircuitGraph) -> str:
    """GraphML with wires as typed nodes (wires may touch more than two terminals)."""
    root = ET.Element("graphml", xmlns="http://graphml.graphdrawing.org/xmlns")
    for key_id, attr in (("kind", "kind"), ("label", "label"), ("port", "port")):
        key = ET.SubElement(root, "key")
        key.set("id", key_id)
        key.set("for", "node" if key_id != "port" else "edge")
        key.set("attr.name", attr)
        key.set("attr.type", "string")
    graph = ET.SubElement(root, "graph", edgedefault="undirected")
    for n in sorted(g.nodes, key=lambda n: n.id):
        el = ET.SubElement(graph, "node", id=f"n{n.id}")
        _gdata(el, "kind", n.kind.value)
        _gdata(el, "label", n.label)
    for e in sorted(g.edges, key=lambda e: e.wire_id):
        el = ET.SubElement(graph, "node", id=f"w{e.wire_id}")
        _gdata(el, "kind", "wire")
        _gdata(el, "label", WIRE_CLASS)
        for i, ep in enumerate(e.endpoints):
            if ep.terminal is None:
                continue
            edge = ET.SubElement(graph, "edge", id=f"w{e.wire_id}e{i}",
                                 source=f"w{e.wire_id}", target=f"n{ep.node_id}")
            _gdata(edge, "port", ep.port)
    ET.indent(root)
    return ET.tostring(root, encoding="unicode") + "\n"


def _gdata(parent, key: str, value: str) -> None:
    d = ET.SubElement(parent, "data")
    d.set("key", key)
    d.text = value


def export_netlist_text(n: Netlist) -> str:
    """One net per line, terminals as node:port sorted lexicographically."""
    lines = []
    for net in n.nets:
        lines.append(" ".join(sorted(_terminal_str(t) for t in net)))
    lines.sort()
    return "\n".join(lines) + ("\n" if lines else "")


def export_graph(g: CircuitGraph, fmt: str) -> str:
    """Serialize to one named format: json (round-trippable), graphml, netlist."""
    if fmt == "json":
        return json.dumps(export_graph_json(g), indent=2, sort_keys=True) + "\n"
    if fmt == "graphml":
        return export_graphml(g)
    if fmt == "netlist":
        return export_netlist_text(to_netlist(g))
    raise ValueError(f"unsupported export format {fmt!r}; "
                     "pick json, graphml, or netlist")
