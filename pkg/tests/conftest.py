import pytest

from icnsim.cli import default_config_path
from icnsim.scenario import load_config

SMALL_MPD = """<?xml version="1.0" encoding="UTF-8"?>
<MPD xmlns="urn:mpeg:dash:schema:mpd:2011" type="static" mediaPresentationDuration="PT16S">
  <Period>
    <AdaptationSet>
      <SegmentTemplate media="small_rep$RepresentationID$_seg$Number$.svc" duration="2000" timescale="1000" startNumber="1"/>
      <Representation id="0" bandwidth="400000"/>
      <Representation id="1" bandwidth="600000" dependencyId="0"/>
      <Representation id="2" bandwidth="800000" dependencyId="1"/>
      <Representation id="3" bandwidth="1000000" dependencyId="2"/>
    </AdaptationSet>
  </Period>
</MPD>
"""


@pytest.fixture()
def default_config():
    return load_config(default_config_path())


@pytest.fixture()
def small_config(tmp_path):
    """Default topology, but a 4-layer 8-segment video: runs finish in ~10 ms."""
    config = load_config(default_config_path())
    mpd_file = tmp_path / "small.mpd"
    mpd_file.write_text(SMALL_MPD, encoding="utf-8")
    config.mpd_file = mpd_file
    config.mpd_url = "http://concert.itec.aau.at/SVCDataset/dataset/mpd-temp/small.mpd"
    config.client.representation = 2
    config.client.distributed_representation = 3
    config.seeds = [1]
    return config
