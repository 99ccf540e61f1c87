"""Grouping predicted duplicate pairs into clusters and a removal list.

Components come from an iterative depth-first search over the pair
graph; an explicit stack keeps deep chains from hitting the recursion
limit on corpus-sized inputs. Each cluster keeps the member with the
most notes as its representative (ties go to the lexicographically
smaller id); everything else lands on the filter list.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

Pair = tuple[str, str]


@dataclass(frozen=True)
class Cluster:
    representative: str
    members: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.representative not in self.members:
            raise ValueError("representative must be a member")
        if list(self.members) != sorted(self.members):
            raise ValueError("members must be sorted")
        if len(self.members) < 2:
            raise ValueError("a cluster needs at least two members")


def build_graph(pairs: Iterable[Pair]) -> dict[str, list[str]]:
    """Undirected simple adjacency lists; isolated files never appear.
    Neighbor lists and keys come back sorted for determinism."""
    adj: dict[str, set[str]] = {}
    for a, b in pairs:
        if a == b:
            raise ValueError(f"self edge for {a!r}")
        adj.setdefault(a, set()).add(b)
        adj.setdefault(b, set()).add(a)
    return {node: sorted(adj[node]) for node in sorted(adj)}


def connected_components(graph: Mapping[str, Sequence[str]]) -> list[list[str]]:
    """Components of an adjacency structure, each sorted, ordered by
    their smallest member."""
    visited: set[str] = set()
    components = []
    for start in sorted(graph):
        if start in visited:
            continue
        stack = [start]
        comp = []
        while stack:
            node = stack.pop()
            if node in visited:
                continue
            visited.add(node)
            comp.append(node)
            stack.extend(n for n in reversed(graph[node]) if n not in visited)
        components.append(sorted(comp))
    return components


def choose_representative(members: Sequence[str],
                          note_counts: Mapping[str, int]) -> str:
    missing = [m for m in members if m not in note_counts]
    if missing:
        raise KeyError(f"no note count for {missing[:5]}")
    return min(members, key=lambda m: (-note_counts[m], m))


def select_representatives(
    components: Iterable[Sequence[str]],
    note_counts: Mapping[str, int],
) -> tuple[list[str], list[str]]:
    """Split clustered files into (keep, filter): per component the
    highest-note-count member stays, everything else is filtered."""
    keep = []
    filtered = []
    for comp in components:
        rep = choose_representative(comp, note_counts)
        keep.append(rep)
        filtered.extend(m for m in comp if m != rep)
    return sorted(keep), sorted(filtered)


def build_clusters(pairs: Iterable[Pair],
                   note_counts: Mapping[str, int]) -> list[Cluster]:
    clusters = []
    for comp in connected_components(build_graph(pairs)):
        rep = choose_representative(comp, note_counts)
        clusters.append(Cluster(representative=rep, members=tuple(comp)))
    return clusters


def filter_list(clusters: Iterable[Cluster]) -> list[str]:
    """Every clustered file except the representatives, sorted. Its size
    is the sum of (cluster size - 1) over all clusters."""
    out = []
    for c in clusters:
        out.extend(m for m in c.members if m != c.representative)
    return sorted(out)


def emit_filter_list(filtered: Sequence[str], clusters: Sequence[Cluster],
                     filter_path: str | Path,
                     clusters_path: str | Path) -> dict[str, int]:
    """Write the removal list and cluster table; returns their sizes."""
    write_filter_list(filter_path, filtered)
    write_clusters(clusters_path, clusters)
    return {"clusters": len(clusters), "filtered": len(filtered)}


def write_clusters(path: str | Path, clusters: Sequence[Cluster]) -> None:
    rows = [{"representative": c.representative, "members": list(c.members)}
            for c in clusters]
    with open(path, "w") as fh:
        json.dump(rows, fh, indent=1)
        fh.write("\n")


def read_clusters(path: str | Path) -> list[Cluster]:
    with open(path) as fh:
        rows = json.load(fh)
    return [Cluster(representative=r["representative"],
                    members=tuple(r["members"])) for r in rows]


def write_filter_list(path: str | Path, ids: Sequence[str]) -> None:
    with open(path, "w") as fh:
        for pid in ids:
            fh.write(pid + "\n")


def read_filter_list(path: str | Path) -> list[str]:
    with open(path) as fh:
        return [line.rstrip("\n") for line in fh if line.strip()]
