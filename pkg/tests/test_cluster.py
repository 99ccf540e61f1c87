"""Clustering of duplicate pairs and the derived filter list."""

import random

import pytest

from mididedup.cluster import (
    Cluster,
    build_clusters,
    build_graph,
    choose_representative,
    connected_components,
    emit_filter_list,
    filter_list,
    read_clusters,
    read_filter_list,
    select_representatives,
    write_clusters,
    write_filter_list,
)

from helpers import components_oracle


def random_pairs(rng, n_nodes, n_edges):
    nodes = [f"n{i:03d}" for i in range(n_nodes)]
    pairs = []
    for _ in range(n_edges):
        a, b = rng.sample(nodes, 2)
        pairs.append((a, b))
    return nodes, pairs


# ---------------------------------------------------------------- graph


def test_build_graph_sorted_adjacency():
    graph = build_graph([("b", "a"), ("c", "a"), ("b", "c"), ("b", "a")])
    assert list(graph) == ["a", "b", "c"]
    assert graph["a"] == ["b", "c"]
    assert graph["b"] == ["a", "c"]
    assert graph["c"] == ["a", "b"]


def test_build_graph_isolated_files_absent():
    graph = build_graph([("a", "b")])
    assert set(graph) == {"a", "b"}


def test_build_graph_rejects_self_edge():
    with pytest.raises(ValueError, match="self edge"):
        build_graph([("a", "a")])


def test_components_two_triangles():
    pairs = [("a", "b"), ("b", "c"), ("x", "y"), ("y", "z"), ("z", "x")]
    comps = connected_components(build_graph(pairs))
    assert comps == [["a", "b", "c"], ["x", "y", "z"]]


def test_components_ordered_by_smallest_member():
    pairs = [("m", "z"), ("a", "q")]
    comps = connected_components(build_graph(pairs))
    assert comps == [["a", "q"], ["m", "z"]]


def test_components_match_transitive_closure_oracle():
    rng = random.Random(20260814)
    for trial in range(200):
        n_nodes = rng.randint(2, 50)
        n_edges = rng.randint(1, 80)
        nodes, pairs = random_pairs(rng, n_nodes, n_edges)
        got = connected_components(build_graph(pairs))
        want = components_oracle(nodes, pairs)
        assert got == want, f"trial {trial}"


def test_components_survive_deep_chain():
    # recursion would blow up here; the DFS must be iterative
    n = 50_000
    pairs = [(f"v{i:06d}", f"v{i + 1:06d}") for i in range(n - 1)]
    comps = connected_components(build_graph(pairs))
    assert len(comps) == 1
    assert len(comps[0]) == n
    assert comps[0][0] == "v000000"


def test_components_edge_order_independent():
    rng = random.Random(5)
    _, pairs = random_pairs(rng, 30, 40)
    base = connected_components(build_graph(pairs))
    for _ in range(5):
        shuffled = pairs[:]
        rng.shuffle(shuffled)
        flipped = [(b, a) if rng.random() < 0.5 else (a, b)
                   for a, b in shuffled]
        assert connected_components(build_graph(flipped)) == base


# ------------------------------------------------------- representatives


def test_choose_representative_max_note_count():
    counts = {"a": 10, "b": 30, "c": 20}
    assert choose_representative(["a", "b", "c"], counts) == "b"


def test_choose_representative_lex_tie_break():
    counts = {"a/z.mid": 30, "a/b.mid": 30, "a/c.mid": 10}
    got = choose_representative(["a/z.mid", "a/b.mid", "a/c.mid"], counts)
    assert got == "a/b.mid"


def test_choose_representative_missing_count_raises():
    with pytest.raises(KeyError, match="b"):
        choose_representative(["a", "b"], {"a": 3})


def test_select_representatives_hand_fixture():
    # 9 files in 3 clusters: filter keeps one per cluster, drops 6
    comps = [
        ["a/one.mid", "a/one.2.mid", "a/one.3.mid"],
        ["b/two.mid", "b/two.2.mid", "c/two.mid"],
        ["d/three.mid", "d/three.2.mid", "d/three.3.mid"],
    ]
    counts = {
        "a/one.mid": 100, "a/one.2.mid": 90, "a/one.3.mid": 100,
        "b/two.mid": 50, "b/two.2.mid": 70, "c/two.mid": 70,
        "d/three.mid": 10, "d/three.2.mid": 11, "d/three.3.mid": 9,
    }
    keep, filtered = select_representatives(comps, counts)
    # note-count tie in the first cluster: ".3" sorts before ".mid"
    assert keep == ["a/one.3.mid", "b/two.2.mid", "d/three.2.mid"]
    assert filtered == sorted([
        "a/one.2.mid", "a/one.mid",
        "b/two.mid", "c/two.mid",
        "d/three.mid", "d/three.3.mid",
    ])
    assert len(filtered) == sum(len(c) - 1 for c in comps)


def test_filter_size_matches_cluster_sizes():
    rng = random.Random(99)
    for _ in range(50):
        _, pairs = random_pairs(rng, rng.randint(2, 40), rng.randint(1, 60))
        nodes = {v for p in pairs for v in p}
        counts = {v: rng.randint(1, 500) for v in nodes}
        clusters = build_clusters(pairs, counts)
        flist = filter_list(clusters)
        assert len(flist) == sum(len(c.members) - 1 for c in clusters)
        kept = {c.representative for c in clusters}
        assert kept.isdisjoint(flist)
        assert kept | set(flist) == nodes


def test_select_representatives_idempotent():
    # re-clustering the kept set finds nothing left to merge
    pairs = [("a", "b"), ("b", "c"), ("x", "y")]
    counts = {"a": 5, "b": 9, "c": 1, "x": 2, "y": 2}
    keep, filtered = select_representatives(
        connected_components(build_graph(pairs)), counts)
    assert keep == ["b", "x"]
    surviving = [p for p in pairs if p[0] in keep and p[1] in keep]
    assert build_clusters(surviving, counts) == []
    assert set(keep) | set(filtered) == set(counts)


# ------------------------------------------------------------- clusters


def test_build_clusters_fields():
    pairs = [("a/x.mid", "a/x.2.mid"), ("a/x.2.mid", "b/x.mid")]
    counts = {"a/x.mid": 40, "a/x.2.mid": 41, "b/x.mid": 40}
    clusters = build_clusters(pairs, counts)
    assert clusters == [Cluster(representative="a/x.2.mid",
                                members=("a/x.2.mid", "a/x.mid", "b/x.mid"))]


def test_cluster_validation():
    with pytest.raises(ValueError, match="member"):
        Cluster(representative="q", members=("a", "b"))
    with pytest.raises(ValueError, match="sorted"):
        Cluster(representative="b", members=("b", "a"))
    with pytest.raises(ValueError, match="two members"):
        Cluster(representative="a", members=("a",))


# ----------------------------------------------------------------- io


def test_clusters_round_trip(tmp_path):
    clusters = [
        Cluster(representative="a/x.mid", members=("a/x.2.mid", "a/x.mid")),
        Cluster(representative="b/y.mid", members=("b/y.mid", "c/y.mid")),
    ]
    path = tmp_path / "clusters.json"
    write_clusters(path, clusters)
    assert read_clusters(path) == clusters


def test_filter_list_round_trip(tmp_path):
    ids = ["a/x.2.mid", "c/y.mid"]
    path = tmp_path / "filter_list.txt"
    write_filter_list(path, ids)
    assert path.read_text() == "a/x.2.mid\nc/y.mid\n"
    assert read_filter_list(path) == ids


def test_emit_filter_list_counts_and_files(tmp_path):
    pairs = [("a", "b"), ("b", "c"), ("x", "y")]
    counts = {"a": 5, "b": 9, "c": 1, "x": 2, "y": 2}
    clusters = build_clusters(pairs, counts)
    filtered = filter_list(clusters)
    fpath = tmp_path / "filter_list.txt"
    cpath = tmp_path / "clusters.json"
    stats = emit_filter_list(filtered, clusters, fpath, cpath)
    assert stats == {"clusters": 2, "filtered": 3}
    assert read_filter_list(fpath) == ["a", "c", "y"]
    assert read_clusters(cpath) == clusters
