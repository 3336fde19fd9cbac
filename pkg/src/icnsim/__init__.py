"""URL-steered caching on an emulated SDN fabric.

Per-tenant instances register proxies, caches and prefetchers with a
controller; HTTP sessions are diverted to a delayed-binding proxy, bound to
a cache once the URL is known, and layered video gets prefetched ahead of
the player.  The simulator replays all of that on a deterministic clock.
"""

from .cache import CacheNode, CacheResult
from .controller import IcnController, SteeringDeferred, SteeringResponse
from .errors import ConfigError, IcnError, MpdError
from .flows import FlowManager
from .metrics import ScenarioReport, derive_run_metrics
from .mpd import MpdManifest, parse_mpd, resolve_chain
from .prefetch import AllocationMap, allocate_layers, plan_prefetch
from .registry import IcnRegistry, IcnType
from .scenario import ScenarioConfig, ScenarioKind, load_config
from .simulation import run_scenario, run_single, run_suite
from .topology import Host, Link, Topology

__version__ = "0.1.0"

__all__ = [
    "AllocationMap",
    "CacheNode",
    "CacheResult",
    "ConfigError",
    "FlowManager",
    "Host",
    "IcnController",
    "IcnError",
    "IcnRegistry",
    "IcnType",
    "Link",
    "MpdError",
    "MpdManifest",
    "ScenarioConfig",
    "ScenarioKind",
    "ScenarioReport",
    "SteeringDeferred",
    "SteeringResponse",
    "Topology",
    "allocate_layers",
    "derive_run_metrics",
    "load_config",
    "parse_mpd",
    "plan_prefetch",
    "resolve_chain",
    "run_scenario",
    "run_single",
    "run_suite",
    "__version__",
]
