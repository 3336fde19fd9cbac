#!/usr/bin/env python3
"""Generate the packaged 50-representation layered-video manifest.

Layer layout: a spine of representations each depending on the previous
spine entry, and off-spine entries depending on the nearest spine entry
below them.  Bandwidth grows linearly with the id.
"""

from pathlib import Path

SPINE = [0, 1, 2, 16, 17, 18, 32, 33, 34, 48, 49]
REPRESENTATIONS = 50
BASE_BANDWIDTH = 400_000
BANDWIDTH_STEP = 45_000
DURATION = "PT9M58S"  # 598 s of video, 2 s segments, 299 segments
SEGMENT_MS = 2000


def dependency_of(rid: int) -> int | None:
    if rid in SPINE:
        index = SPINE.index(rid)
        return SPINE[index - 1] if index else None
    return max(s for s in SPINE if s < rid)


def build() -> str:
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<MPD xmlns="urn:mpeg:dash:schema:mpd:2011" type="static"'
        f' mediaPresentationDuration="{DURATION}" minBufferTime="PT2S"'
        ' profiles="urn:mpeg:dash:profile:isoff-main:2011">',
        '  <Period>',
        '    <AdaptationSet mimeType="video/mp4" codecs="svc">',
        f'      <SegmentTemplate media="bbb_rep$RepresentationID$_seg$Number$.svc"'
        f' duration="{SEGMENT_MS}" timescale="1000" startNumber="1"/>',
    ]
    for rid in range(REPRESENTATIONS):
        bandwidth = BASE_BANDWIDTH + BANDWIDTH_STEP * rid
        dep = dependency_of(rid)
        dep_attr = f' dependencyId="{dep}"' if dep is not None else ""
        lines.append(
            f'      <Representation id="{rid}" bandwidth="{bandwidth}"'
            f' width="1920" height="1080"{dep_attr}/>'
        )
    lines += ["    </AdaptationSet>", "  </Period>", "</MPD>", ""]
    return "\n".join(lines)


if __name__ == "__main__":
    out = Path(__file__).resolve().parent.parent / "src" / "icnsim" / "data" / "bbb_svc_50.mpd"
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(build(), encoding="utf-8")
    print(f"wrote {out} ({out.stat().st_size} bytes)")
