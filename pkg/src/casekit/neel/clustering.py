"""Group a document's mentions into entity clusters.

Linked mentions cluster by their knowledge-base id. NIL mentions of each type
form a weighted graph (edges where the pair model scores at or above the
threshold) partitioned with Louvain; the resulting clusters are numbered
NIL-1, NIL-2, ... by the offset of their earliest mention.
"""

from __future__ import annotations

import numpy as np

from .community import WeightedMentionGraph, louvain_partition
from .logistic import LogisticModel
from .similarity import pair_features, pair_score
from ..entities import LINKABLE_TYPES, LinkDecision, Mention, MentionCluster

DEFAULT_EDGE_THRESHOLD = 0.5


def cluster_mentions(
    mentions: list[Mention],
    decisions: dict[str, LinkDecision],
    embeddings: dict[str, np.ndarray],
    pair_model: LogisticModel,
    tau: float = DEFAULT_EDGE_THRESHOLD,
    resolution: float = 1.0,
) -> list[MentionCluster]:
    """Cluster the linkable mentions of one document."""
    linkable = [m for m in mentions if m.mtype in LINKABLE_TYPES]

    linked_groups: dict[str, list[Mention]] = {}
    nil_by_type: dict[str, list[Mention]] = {}
    for m in linkable:
        decision = decisions[m.mention_id]
        if decision.outcome == "LINKED":
            linked_groups.setdefault(decision.kb_id, []).append(m)
        else:
            nil_by_type.setdefault(m.mtype, []).append(m)

    clusters: list[MentionCluster] = []
    for kb_id in sorted(linked_groups):
        members = sorted(linked_groups[kb_id], key=lambda m: m.start)
        clusters.append(
            MentionCluster(
                cluster_id=kb_id,
                member_ids=[m.mention_id for m in members],
                representative=_longest_surface(members),
                mtype=members[0].mtype,
            )
        )

    nil_groups: list[list[Mention]] = []
    for mtype in sorted(nil_by_type):
        group = nil_by_type[mtype]
        by_id = {m.mention_id: m for m in group}
        graph = WeightedMentionGraph()
        for m in group:
            graph.add_node(m.mention_id)
        ids = sorted(by_id)
        for i, a_id in enumerate(ids):
            for b_id in ids[i + 1 :]:
                a, b = by_id[a_id], by_id[b_id]
                feats = pair_features(
                    a.surface, b.surface, embeddings[a_id], embeddings[b_id]
                )
                score = pair_score(pair_model, feats)
                if score >= tau:
                    graph.add_edge(a_id, b_id, score)
        partition = louvain_partition(graph, resolution=resolution)
        for _, member_ids in sorted(partition.groups().items()):
            nil_groups.append(sorted((by_id[i] for i in member_ids), key=lambda m: m.start))

    nil_groups.sort(key=lambda ms: ms[0].start)
    for n, members in enumerate(nil_groups, start=1):
        clusters.append(
            MentionCluster(
                cluster_id=f"NIL-{n}",
                member_ids=[m.mention_id for m in members],
                representative=_longest_surface(members),
                mtype=members[0].mtype,
            )
        )
    return clusters


def _longest_surface(members: list[Mention]) -> str:
    best = members[0].surface
    for m in members[1:]:
        if len(m.surface) > len(best):
            best = m.surface
    return best
