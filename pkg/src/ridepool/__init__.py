"""Ride-hailing fleet simulator with three matching mechanisms.

Subpackages cover the road network (`netgraph`), core entities (`domain`),
fares and cost accounting (`pricing`), the assignment mechanisms
(`mechanisms`), ex-post fare splitting (`costshare`), the simulation engine
(`simengine`), executable property fixtures (`verify`) and the experiment
harness plus CLI (`harness`, `cli`).
"""

__version__ = "0.1.0"
