"""Layer-to-cache allocation and prefetch planning for layered video.

A video with R representation ids is split into contiguous id ranges, one
per cache, nearest cache first.  Lower layers are needed by every client of
the content, so they belong on the cache closest to the viewers; upper
enhancement layers can live further away.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import UnknownRepresentation
from .mpd import MpdManifest, resolve_chain


@dataclass(frozen=True)
class AllocationMap:
    """Contiguous partition of the representation id space [0, R)."""

    representation_count: int
    ranges: tuple[tuple[str, int, int], ...]  # (cache_id, lo, hi) with hi exclusive

    def cache_for(self, repr_id: int) -> str | None:
        for cache_id, lo, hi in self.ranges:
            if lo <= repr_id < hi:
                return cache_id
        return None

    def layers_for(self, cache_id: str, layer_ids: list[int]) -> list[int]:
        return [rid for rid in layer_ids if self.cache_for(rid) == cache_id]


def allocate_layers(representation_count: int, ordered_cache_ids: list[str]) -> AllocationMap:
    """Split [0, R) into one contiguous range per cache, nearest first.

    Range sizes differ by at most one; when R does not divide evenly the
    caches earlier in the list (nearer to the client) take the larger share.
    The nearest cache always holds the lowest ids.
    """
    if representation_count < 1:
        raise ValueError("representation_count must be >= 1")
    if not ordered_cache_ids:
        raise ValueError("at least one cache is required")
    n = len(ordered_cache_ids)
    base, extra = divmod(representation_count, n)
    ranges = []
    lo = 0
    for idx, cache_id in enumerate(ordered_cache_ids):
        size = base + (1 if idx < extra else 0)
        ranges.append((cache_id, lo, lo + size))
        lo += size
    return AllocationMap(representation_count, tuple(ranges))


@dataclass(frozen=True)
class PrefetchCommand:
    """Wire form of one prefetch instruction: fetch uri from server:port."""

    uri: str
    server: str
    port: int

    def to_params(self) -> dict[str, object]:
        return {"uri": self.uri, "server": self.server, "port": self.port}


@dataclass(frozen=True)
class PlannedFetch:
    command: PrefetchCommand
    repr_id: int
    segment_number: int
    cache_id: str | None


@dataclass
class PrefetchPlan:
    session_key: tuple
    commands: list[PlannedFetch] = field(default_factory=list)
    issued_at: float = 0.0

    @property
    def uris(self) -> list[str]:
        return [planned.command.uri for planned in self.commands]


def plan_prefetch(
    manifest: MpdManifest,
    requested_repr: int,
    requested_segment: int,
    *,
    server: str,
    port: int,
    session_key: tuple,
    allocation: AllocationMap | None = None,
    default_cache: str | None = None,
    lookahead: int | None = None,
    already_planned: set[str] | None = None,
    issued_at: float = 0.0,
) -> PrefetchPlan:
    """Commands for every layer of every upcoming segment, in playback order.

    Segments run from the requested one forward (``lookahead`` of them, or to
    the end of the video); within a segment the lowest layer comes first.
    URIs already planned for this session are dropped so re-requests do not
    flood the prefetcher.
    """
    chain = resolve_chain(manifest, requested_repr)
    start = requested_segment
    stop = manifest.start_number + manifest.segment_count
    if lookahead is not None:
        stop = min(stop, start + lookahead)
    if not manifest.start_number <= requested_segment < manifest.start_number + manifest.segment_count:
        raise UnknownRepresentation(
            f"segment {requested_segment} outside [{manifest.start_number}, {stop})"
        )
    seen = already_planned if already_planned is not None else set()
    plan = PrefetchPlan(session_key=session_key, issued_at=issued_at)
    for segment in range(start, stop):
        for layer in chain:
            uri = manifest.segment_url(layer, segment)
            if uri in seen:
                continue
            seen.add(uri)
            cache_id = allocation.cache_for(layer) if allocation is not None else default_cache
            plan.commands.append(
                PlannedFetch(
                    command=PrefetchCommand(uri=uri, server=server, port=port),
                    repr_id=layer,
                    segment_number=segment,
                    cache_id=cache_id if cache_id is not None else default_cache,
                )
            )
    return plan
