"""Substring mining core: generalized suffix tree, frequent substrings with
distinct-document counts, and longest-common-substring queries.

The suffix tree is built once over all documents joined by per-document
terminator symbols drawn from the Unicode private use areas; input text must
not contain those code points. LCS queries run on a suffix automaton, which
gives linear scans and lets one build be reused against many other strings.
"""

from __future__ import annotations

import gc
import math
import re
import sys
import time
from bisect import bisect_right
from dataclasses import dataclass, field

from .errors import DataError

__all__ = [
    "DocumentSet",
    "FrequentSubstringSet",
    "MiningStats",
    "frequent_substrings",
    "longest_common_substring",
    "lcs_length",
    "maximal_shared_substrings",
    "group_unique_check",
    "ceil_threshold",
]

# Terminator symbols: BMP private use area, then the two supplementary planes.
_TERMINATOR_RANGES = (
    (0xE000, 0xF8FF),
    (0xF0000, 0xFFFFD),
    (0x100000, 0x10FFFD),
)
_RESERVED_RE = re.compile("[-\U000F0000-\U000FFFFD\U00100000-\U0010FFFD]")
_TERMINATOR_CAPACITY = sum(hi - lo + 1 for lo, hi in _TERMINATOR_RANGES)


def _terminator(i: int) -> str:
    for lo, hi in _TERMINATOR_RANGES:
        span = hi - lo + 1
        if i < span:
            return chr(lo + i)
        i -= span
    raise DataError(f"document count exceeds terminator capacity ({_TERMINATOR_CAPACITY})")


def ceil_threshold(fraction: float, count: int) -> int:
    """Smallest integer >= fraction * count, robust to float dust (0.9*10 etc.)."""
    return math.ceil(round(fraction * count, 9))


@dataclass(frozen=True)
class DocumentSet:
    """An ordered collection of documents with dense ids 0..n-1.

    Empty documents are allowed: they contain no substrings but still count
    toward the frequency threshold denominator.
    """

    docs: tuple[str, ...]

    def __post_init__(self):
        if not self.docs:
            raise DataError("a DocumentSet needs at least one document")
        if len(self.docs) > _TERMINATOR_CAPACITY:
            raise DataError("too many documents for the terminator alphabet")
        for i, doc in enumerate(self.docs):
            if _RESERVED_RE.search(doc):
                raise DataError(
                    f"document {i} contains reserved private-use code points"
                )

    @property
    def n(self) -> int:
        return len(self.docs)

    @property
    def max_length(self) -> int:
        return max((len(d) for d in self.docs), default=0)


@dataclass(frozen=True)
class MiningStats:
    nodes_built: int
    substrings_reported: int
    wall_time_s: float
    peak_strings_bytes: int

    def to_json_dict(self) -> dict:
        return {
            "nodes_built": self.nodes_built,
            "substrings_reported": self.substrings_reported,
            "wall_time_s": self.wall_time_s,
            "peak_strings_bytes": self.peak_strings_bytes,
        }


@dataclass(frozen=True)
class FrequentSubstringSet:
    """Substrings meeting the distinct-document count threshold.

    ``entries`` maps each substring to the number of distinct documents
    containing it (a document counts once no matter how often the substring
    repeats inside it).
    """

    entries: dict[str, int]
    threshold: int
    stats: MiningStats | None = field(default=None, compare=False)

    def __contains__(self, s: str) -> bool:
        return s in self.entries

    def __len__(self) -> int:
        return len(self.entries)


# --- generalized suffix tree (Ukkonen) ---------------------------------------


class _Node:
    __slots__ = ("start", "end", "link", "children", "count", "rep")

    def __init__(self, start: int, end: int | None):
        self.start = start
        self.end = end  # None = open leaf edge (global end)
        self.link = None
        self.children: dict[str, "_Node"] | None = None
        self.count = 0  # distinct documents under this node
        self.rep = -1  # suffix start of one leaf below, for path slicing


def _build_suffix_tree(text: str) -> tuple[_Node, int]:
    """Ukkonen's online construction over the full text. Returns (root, node count)."""
    root = _Node(-1, -1)
    root.children = {}
    root.link = root
    active_node = root
    active_edge = 0  # index into text of the first char of the active edge
    active_len = 0
    remainder = 0
    node_count = 1
    n = len(text)

    for i in range(n):
        ch = text[i]
        remainder += 1
        last_internal: _Node | None = None
        while remainder > 0:
            if active_len == 0:
                active_edge = i
            edge_ch = text[active_edge]
            child = active_node.children.get(edge_ch)
            if child is None:
                leaf = _Node(i, None)
                node_count += 1
                active_node.children[edge_ch] = leaf
                if last_internal is not None:
                    last_internal.link = active_node
                    last_internal = None
            else:
                edge_end = child.end if child.end is not None else n
                edge_len = edge_end - child.start
                if active_len >= edge_len:
                    # walk down one edge and retry this extension
                    active_edge += edge_len
                    active_len -= edge_len
                    active_node = child
                    continue
                if text[child.start + active_len] == ch:
                    # current char already on the edge: extend and end phase
                    active_len += 1
                    if last_internal is not None:
                        last_internal.link = active_node
                    break
                # split the edge
                split = _Node(child.start, child.start + active_len)
                split.children = {}
                node_count += 1
                active_node.children[edge_ch] = split
                leaf = _Node(i, None)
                node_count += 1
                split.children[ch] = leaf
                child.start += active_len
                split.children[text[child.start]] = child
                if last_internal is not None:
                    last_internal.link = split
                last_internal = split
            remainder -= 1
            if active_node is root and active_len > 0:
                active_len -= 1
                active_edge = i - remainder + 1
            else:
                active_node = active_node.link if active_node.link is not None else root
    return root, node_count


def frequent_substrings(
    d: DocumentSet,
    q: float,
    max_len: int | None = None,
) -> FrequentSubstringSet:
    """All substrings contained in at least ceil(q*n) distinct documents.

    Builds a generalized suffix tree, annotates every node with its
    distinct-document count (bottom-up small-to-large set merging), and
    reports each qualifying path string once. ``max_len`` optionally caps
    the length of reported substrings.
    """
    if not 0 < q <= 1:
        raise DataError(f"q must be in (0, 1], got {q}")
    t0 = time.perf_counter()
    n_docs = d.n
    threshold = ceil_threshold(q, n_docs)

    pieces: list[str] = []
    doc_starts: list[int] = []
    pos = 0
    for i, doc in enumerate(d.docs):
        doc_starts.append(pos)
        pieces.append(doc)
        pieces.append(_terminator(i))
        pos += len(doc) + 1
    text = "".join(pieces)
    n = len(text)

    # Millions of short-lived nodes thrash the cyclic collector; suffix links
    # are cleared at the end so plain refcounting reclaims the tree.
    gc_was_enabled = gc.isenabled()
    gc.disable()
    try:
        entries, node_count, reported_bytes = _mine(
            text, n, d, doc_starts, threshold, max_len
        )
    finally:
        if gc_was_enabled:
            gc.enable()

    wall = time.perf_counter() - t0
    stats = MiningStats(
        nodes_built=node_count,
        substrings_reported=len(entries),
        wall_time_s=wall,
        peak_strings_bytes=sys.getsizeof(text) + reported_bytes,
    )
    return FrequentSubstringSet(entries=entries, threshold=threshold, stats=stats)


def _mine(
    text: str,
    n: int,
    d: DocumentSet,
    doc_starts: list[int],
    threshold: int,
    max_len: int | None,
) -> tuple[dict[str, int], int, int]:
    root, node_count = _build_suffix_tree(text)

    # Iterative DFS in discovery order; walking it backwards visits children
    # before parents, which is all the counting pass needs.
    order: list[_Node] = []
    depths: list[int] = []
    pdepths: list[int] = []
    stack: list[tuple[_Node, int]] = [(root, 0)]
    while stack:
        node, depth = stack.pop()
        if node is not root:
            edge_end = node.end if node.end is not None else n
            node_depth = depth + (edge_end - node.start)
            order.append(node)
            depths.append(node_depth)
            pdepths.append(depth)
        else:
            node_depth = 0
        if node.children:
            for child in node.children.values():
                stack.append((child, node_depth))

    # Distinct-document counts: small-to-large merging of doc-id sets, with
    # leaves folded directly into their parent's set (no singleton churn).
    # Each internal node's set is held only until its parent consumes it.
    sets: dict[int, set[int]] = {}
    for k in range(len(order) - 1, -1, -1):
        node = order[k]
        if node.children is None:
            node.count = 1
            node.rep = n - depths[k]
            continue
        merged: set[int] | None = None
        rep = -1
        leaf_ids = []
        for child in node.children.values():
            if rep < 0:
                rep = child.rep
            if child.children is None:
                leaf_ids.append(bisect_right(doc_starts, child.rep) - 1)
            else:
                child_set = sets.pop(id(child))
                if merged is None or len(child_set) > len(merged):
                    child_set.update(merged or ())
                    merged = child_set
                else:
                    merged.update(child_set)
        if merged is None:
            merged = set(leaf_ids)
        else:
            merged.update(leaf_ids)
        node.count = len(merged)
        node.rep = rep
        sets[id(node)] = merged
    sets.clear()

    # Report: every path prefix ending strictly inside a qualifying node's
    # incoming edge. Leaf edges are clipped at their document's terminator.
    entries: dict[str, int] = {}
    reported_bytes = 0
    for k, node in enumerate(order):
        count = node.count
        if count < threshold:
            continue
        rep = node.rep
        if node.children:
            hi = depths[k]
        else:
            doc_id = bisect_right(doc_starts, rep) - 1
            doc_term = doc_starts[doc_id] + len(d.docs[doc_id])
            hi = doc_term - rep
        if max_len is not None:
            hi = min(hi, max_len)
        for length in range(pdepths[k] + 1, hi + 1):
            s = text[rep : rep + length]
            entries[s] = count
            reported_bytes += sys.getsizeof(s)

    # Suffix links make the node graph cyclic; drop them so the whole tree
    # frees by refcount as soon as these locals go away.
    root.link = None
    for node in order:
        node.link = None
    return entries, node_count, reported_bytes


# --- suffix automaton for LCS queries -----------------------------------------


class _Automaton:
    """Suffix automaton of one string, with earliest-occurrence end positions."""

    __slots__ = ("lens", "links", "trans", "minend", "last")

    def __init__(self, s: str):
        self.lens = [0]
        self.links = [-1]
        self.trans: list[dict[str, int]] = [{}]
        # minend[v]: smallest end index (0-based, inclusive) of any occurrence
        # of the strings in state v's class; filled after construction.
        self.minend = [-1]
        self.last = 0
        for i, ch in enumerate(s):
            self._extend(i, ch)
        self._fill_minend()

    def _extend(self, i: int, ch: str) -> None:
        lens, links, trans, minend = self.lens, self.links, self.trans, self.minend
        cur = len(lens)
        lens.append(lens[self.last] + 1)
        links.append(-1)
        trans.append({})
        minend.append(i)
        p = self.last
        while p != -1 and ch not in trans[p]:
            trans[p][ch] = cur
            p = links[p]
        if p == -1:
            links[cur] = 0
        else:
            q = trans[p][ch]
            if lens[p] + 1 == lens[q]:
                links[cur] = q
            else:
                clone = len(lens)
                lens.append(lens[p] + 1)
                links.append(links[q])
                trans.append(dict(trans[q]))
                minend.append(-2)  # filled from link-tree children later
                while p != -1 and trans[p].get(ch) == q:
                    trans[p][ch] = clone
                    p = links[p]
                links[q] = clone
                links[cur] = clone
        self.last = cur

    def _fill_minend(self) -> None:
        # Propagate earliest end positions up the suffix-link tree; states in
        # order of decreasing len are always children-before-parents.
        order = sorted(range(1, len(self.lens)), key=self.lens.__getitem__, reverse=True)
        minend, links = self.minend, self.links
        big = 1 << 60
        for v in range(len(minend)):
            if minend[v] == -2:
                minend[v] = big
        for v in order:
            parent = links[v]
            if parent >= 0 and minend[v] < minend[parent]:
                minend[parent] = minend[v]

    def scan(self, other: str):
        """Yield (j, length, state) of the longest match ending at each j in other."""
        trans, links, lens = self.trans, self.links, self.lens
        v = 0
        length = 0
        for j, ch in enumerate(other):
            while v != 0 and ch not in trans[v]:
                v = links[v]
                length = lens[v]
            nxt = trans[v].get(ch)
            if nxt is not None:
                v = nxt
                length += 1
            else:
                length = 0
            yield j, length, v


def lcs_length(a: str, b: str) -> int:
    """Length of the longest common (contiguous) substring."""
    if not a or not b:
        return 0
    if len(a) > len(b):
        a, b = b, a  # build the automaton on the shorter side
    auto = _Automaton(a)
    best = 0
    for _j, length, _v in auto.scan(b):
        if length > best:
            best = length
    return best


def longest_common_substring(a: str, b: str) -> str:
    """A longest contiguous substring of both inputs.

    Ties go to the candidate whose occurrence starts earliest in ``a``, then
    earliest in ``b``. Returns "" when the strings share no character.
    """
    if not a or not b:
        return ""
    auto = _Automaton(a)
    best_len = 0
    best_start_a = -1
    best_start_b = -1
    for j, length, v in auto.scan(b):
        if length == 0:
            continue
        start_a = auto.minend[v] - length + 1
        start_b = j - length + 1
        if length > best_len or (
            length == best_len
            and (start_a < best_start_a
                 or (start_a == best_start_a and start_b < best_start_b))
        ):
            best_len = length
            best_start_a = start_a
            best_start_b = start_b
    if best_len == 0:
        return ""
    return a[best_start_a : best_start_a + best_len]


def maximal_shared_substrings(a: str, b: str, min_len: int = 1) -> set[str]:
    """Common substrings of length >= min_len not contained in a longer one."""
    if not a or not b or min_len < 1:
        return set()
    auto = _Automaton(a)
    candidates: set[str] = set()
    prev_j = -1
    prev_len = 0
    for j, length, _v in auto.scan(b):
        # a match is right-maximal when the next position cannot extend it
        if prev_len >= min_len and length <= prev_len:
            candidates.add(b[prev_j - prev_len + 1 : prev_j + 1])
        prev_j, prev_len = j, length
    if prev_len >= min_len:
        candidates.add(b[prev_j - prev_len + 1 : prev_j + 1])
    # drop candidates contained in a longer candidate
    ordered = sorted(candidates, key=len, reverse=True)
    kept: list[str] = []
    result: set[str] = set()
    for s in ordered:
        if any(s in t for t in kept if len(t) > len(s)):
            continue
        kept.append(s)
        result.add(s)
    return result


def group_unique_check(groups: list[FrequentSubstringSet]) -> list[set[str]]:
    """Per group, the substrings frequent in that group and in no other.

    A single hash map from substring to owning groups keeps this linear in
    the total substring volume.
    """
    if not groups:
        raise DataError("at least one group is required")
    owners: dict[str, int] = {}
    shared: set[str] = set()
    for gi, g in enumerate(groups):
        for s in g.entries:
            prev = owners.setdefault(s, gi)
            if prev != gi:
                shared.add(s)
    return [
        {s for s in g.entries if s not in shared}
        for g in groups
    ]
