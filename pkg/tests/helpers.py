"""Shared builders for tests: small topologies and randomized fabrics."""

from __future__ import annotations

import random

from icnsim.topology import Host, Link, Topology


def line_topology(
    switches: int = 3,
    latency_ms: float = 1.0,
    bandwidth_mbps: float = 100.0,
    hosts: dict[str, str] | None = None,
) -> Topology:
    """s1 - s2 - ... - sN, with hosts attached by {host_id: dpid}."""
    names = [f"s{i + 1}" for i in range(switches)]
    links = [
        Link(a=names[i], a_port=2 * i + 1, b=names[i + 1], b_port=2 * i + 2,
             latency_ms=latency_ms, bandwidth_mbps=bandwidth_mbps)
        for i in range(switches - 1)
    ]
    built: dict[str, Host] = {}
    next_port: dict[str, int] = {name: 100 for name in names}
    for index, (host_id, dpid) in enumerate(sorted((hosts or {}).items())):
        port = next_port[dpid]
        next_port[dpid] += 1
        built[host_id] = Host(
            host_id=host_id,
            mac=f"02:00:00:00:00:{index + 1:02x}",
            ip=f"10.0.0.{index + 1}",
            dpid=dpid,
            port=port,
            access_latency_ms=0.5,
            access_bandwidth_mbps=100.0,
        )
    return Topology(switches=names, links=links, hosts=built)


def random_topology(rng: random.Random, max_switches: int = 6) -> Topology:
    """Random connected fabric with client, proxy, cache and origin attached."""
    count = rng.randint(2, max_switches)
    names = [f"s{i + 1}" for i in range(count)]
    port_seq = {name: 1 for name in names}

    def take_port(name: str) -> int:
        port = port_seq[name]
        port_seq[name] += 1
        return port

    links = []
    wired: set[frozenset[str]] = set()

    def wire(a: str, b: str) -> None:
        wired.add(frozenset((a, b)))
        links.append(
            Link(
                a=a,
                a_port=take_port(a),
                b=b,
                b_port=take_port(b),
                latency_ms=round(rng.uniform(0.1, 5.0), 3),
                bandwidth_mbps=rng.choice([10.0, 100.0, 1000.0]),
            )
        )

    for i in range(1, count):  # random spanning tree first: always connected
        wire(names[rng.randrange(i)], names[i])
    for _ in range(rng.randint(0, count)):  # optional extra edges
        a, b = rng.sample(names, 2)
        if frozenset((a, b)) not in wired:
            wire(a, b)

    hosts = {}
    for index, host_id in enumerate(["client", "proxy", "cache", "origin"]):
        dpid = rng.choice(names)
        hosts[host_id] = Host(
            host_id=host_id,
            mac=f"0a:00:00:00:00:{index + 1:02x}",
            ip=f"10.1.0.{index + 1}",
            dpid=dpid,
            port=take_port(dpid),
            access_latency_ms=round(rng.uniform(0.1, 2.0), 3),
            access_bandwidth_mbps=rng.choice([10.0, 100.0]),
        )
    topology = Topology(switches=names, links=links, hosts=hosts)
    topology.validate()
    return topology
