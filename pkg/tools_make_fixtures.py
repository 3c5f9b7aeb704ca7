"""One-shot generator for the fixture JSON documents (run from repo root)."""

import pathlib

from sigmado.graphs import (
    ALLOW_CLUSTER_LEVEL, ClusterGraph, ClusterPartition, MixedGraph, quotient,
)
from sigmado.graphio import parse_graph, serialize_graph
from sigmado.hedges import sc_projection

OUT = pathlib.Path("src/sigmado/fixtures")


def cluster_graph(vertices, directed, bidirected, members=None):
    graph = MixedGraph(vertices, directed, bidirected, ALLOW_CLUSTER_LEVEL)
    members = members or {}
    clusters = {v: members.get(v) for v in vertices}
    return ClusterGraph(graph, ClusterPartition(clusters))


FIG1_PARTITION = {
    "C_X": ("X1", "X2", "X3"),
    "C_Y": ("Y1", "Y2"),
    "C_W": ("W1", "W2", "W3", "W4"),
}

fig1a = MixedGraph(
    ["X1", "X2", "X3", "Y1", "Y2", "W1", "W2", "W3", "W4"],
    [("X1", "X2"), ("X1", "X3"), ("W3", "W2"), ("W4", "W1"),
     ("X2", "X3"), ("X3", "X2"), ("X2", "W3"), ("W3", "X2"),
     ("Y2", "W4"), ("W2", "Y1")],
    [("W3", "W4"), ("X1", "Y1")],
)

fig1b = MixedGraph(
    ["X1", "X2", "X3", "Y1", "Y2", "W1", "W2", "W3", "W4"],
    [("X1", "X2"), ("X3", "X1"), ("X2", "X3"), ("W1", "W3"), ("W2", "W4"),
     ("X2", "W1"), ("W1", "X3"), ("Y2", "W2"), ("W2", "Y1")],
    [("W1", "W2"), ("X1", "Y1")],
)

fig1c = cluster_graph(
    ["C_X", "C_Y", "C_W"],
    [("C_X", "C_W"), ("C_W", "C_X"), ("C_W", "C_Y"), ("C_Y", "C_W"),
     ("C_X", "C_X"), ("C_W", "C_W")],
    [("C_X", "C_Y"), ("C_W", "C_W")],
    members=FIG1_PARTITION,
)

fig2a = cluster_graph(
    ["C_W", "C_X", "C_Y"],
    [("C_X", "C_Y"), ("C_X", "C_W"), ("C_W", "C_X"),
     ("C_W", "C_W"), ("C_X", "C_X"), ("C_Y", "C_Y")],
    [("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
)

fig2b = cluster_graph(
    ["C_X", "C_W", "C_Y"],
    [("C_X", "C_W"), ("C_W", "C_Y"),
     ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
    [("C_X", "C_Y"), ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
)

fig2c = cluster_graph(
    ["C_X", "C_W", "C_Z", "C_Y"],
    [("C_X", "C_Y"), ("C_X", "C_W"), ("C_W", "C_Z"),
     ("C_Y", "C_W"), ("C_W", "C_Y"),
     ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W"), ("C_Z", "C_Z")],
    [("C_X", "C_Z"),
     ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W"), ("C_Z", "C_Z")],
)

fig2d = cluster_graph(
    ["C_X", "C_Z", "C_R", "C_U", "C_W", "C_Y"],
    [("C_Z", "C_X"), ("C_Z", "C_Y"), ("C_W", "C_X"), ("C_Z", "C_W"),
     ("C_W", "C_U"), ("C_Y", "C_U"), ("C_W", "C_Y"), ("C_W", "C_R"),
     ("C_U", "C_R"), ("C_R", "C_Y"), ("C_X", "C_R"),
     ("C_X", "C_X"), ("C_Z", "C_Z"), ("C_Y", "C_Y"), ("C_W", "C_W"),
     ("C_U", "C_U")],
    [("C_W", "C_Y"),
     ("C_Z", "C_Z"), ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W"),
     ("C_U", "C_U")],
)

fig3a = cluster_graph(
    ["C_X", "C_Y"],
    [("C_X", "C_Y"), ("C_Y", "C_X"), ("C_X", "C_X")],
    [("C_X", "C_X"), ("C_Y", "C_Y")],
)

fig3b = cluster_graph(
    ["C_X", "C_Y"],
    [("C_X", "C_Y"), ("C_X", "C_X"), ("C_Y", "C_Y")],
    [("C_X", "C_Y"), ("C_X", "C_X"), ("C_Y", "C_Y")],
)

fig3c = cluster_graph(
    ["C_W", "C_X", "C_Y"],
    [("C_X", "C_Y"), ("C_X", "C_W"), ("C_W", "C_X"),
     ("C_W", "C_W"), ("C_X", "C_X"), ("C_Y", "C_Y")],
    [("C_W", "C_Y"), ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
)

fig3d = cluster_graph(
    ["C_X", "C_W", "C_Y"],
    [("C_X", "C_W"), ("C_W", "C_X"), ("C_W", "C_Y"), ("C_Y", "C_W"),
     ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
    [("C_X", "C_Y"), ("C_X", "C_X"), ("C_Y", "C_Y"), ("C_W", "C_W")],
)

FIXTURES = {
    "fig1a": fig1a, "fig1b": fig1b, "fig1c": fig1c,
    "fig2a": fig2a, "fig2b": fig2b, "fig2c": fig2c, "fig2d": fig2d,
    "fig3a": fig3a, "fig3b": fig3b, "fig3c": fig3c, "fig3d": fig3d,
    "fig4a": sc_projection(fig2a), "fig4b": sc_projection(fig2b),
    "fig4c": sc_projection(fig2c), "fig4d": sc_projection(fig2d),
    "fig4e": sc_projection(fig3a), "fig4f": sc_projection(fig3b),
    "fig4g": sc_projection(fig3c), "fig4h": sc_projection(fig3d),
}

# sanity: fig1a and fig1b quotient to fig1c, per the figure caption
for micro in (fig1a, fig1b):
    assert quotient(micro, ClusterPartition(FIG1_PARTITION)).graph == fig1c.graph

# sanity: the projection added exactly the red edges of the projections figure
EXPECTED_ADDED = {
    "fig4a": {("C_W", "C_X")},
    "fig4b": set(),
    "fig4c": {("C_W", "C_Y")},
    "fig4d": {("C_R", "C_U"), ("C_R", "C_Y"), ("C_U", "C_Y")},
    "fig4e": {("C_X", "C_Y")},
    "fig4f": set(),
    "fig4g": {("C_W", "C_X")},
    "fig4h": {("C_W", "C_X"), ("C_W", "C_Y")},
}
SOURCES = {"fig4a": fig2a, "fig4b": fig2b, "fig4c": fig2c, "fig4d": fig2d,
           "fig4e": fig3a, "fig4f": fig3b, "fig4g": fig3c, "fig4h": fig3d}
for name, src in SOURCES.items():
    added = set(FIXTURES[name].bidirected_edges) - set(src.bidirected_edges)
    assert added == EXPECTED_ADDED[name], (name, added)

for name, g in FIXTURES.items():
    text = serialize_graph(g)
    assert parse_graph(text) == g, name  # round-trip
    (OUT / f"{name}.json").write_text(text, encoding="utf-8")
    print("wrote", name)
