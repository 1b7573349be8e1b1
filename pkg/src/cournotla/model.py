"""Market participants and the scalar economics of the Cournot market.

Suppliers carry quadratic costs C(g) = m/2 g^2 + n g + o, consumers carry
quadratic utilities U(d) = w d - v/2 d^2, and a supplier's profit is its
nodal price times its dispatched quantity minus cost.  All types are
immutable after construction and all functions here are pure.

Bus indices are 0-based everywhere in code; scenario JSON files use the
1-based numbering of the usual one-line diagrams and are converted on load.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Mapping


class ModelError(ValueError):
    """Invalid parameter or argument in the market model."""


@dataclass(frozen=True)
class SupplierParams:
    id: str
    node: int
    m: float  # $/MW^2 h, quadratic cost coefficient
    n: float  # $/MWh, linear cost coefficient
    o: float  # $/h, fixed cost
    g_min: float = 0.0
    g_max: float = 2000.0

    def __post_init__(self):
        if self.m <= 0:
            raise ModelError(f"supplier {self.id}: m must be > 0 (strictly convex cost)")
        if not (0 <= self.g_min < self.g_max):
            raise ModelError(f"supplier {self.id}: need 0 <= g_min < g_max")


@dataclass(frozen=True)
class ConsumerParams:
    id: str
    node: int
    w: float  # $/MWh, linear utility coefficient
    v: float  # $/MW^2 h, quadratic utility coefficient

    def __post_init__(self):
        if self.v <= 0:
            raise ModelError(f"consumer {self.id}: v must be > 0 (strictly concave utility)")
        if self.w <= 0:
            raise ModelError(f"consumer {self.id}: w must be > 0")


@dataclass(frozen=True)
class Line:
    from_bus: int
    to_bus: int
    reactance: float
    capacity: float | None = None  # MW; None means unbounded

    def __post_init__(self):
        if self.reactance <= 0:
            raise ModelError("line reactance must be > 0")
        if self.capacity is not None and self.capacity <= 0:
            raise ModelError("line capacity must be > 0 when bounded")

    @property
    def name(self) -> str:
        return f"{self.from_bus + 1}-{self.to_bus + 1}"


@dataclass(frozen=True)
class Network:
    bus_count: int
    lines: tuple[Line, ...]
    reference_bus: int = 0

    def __post_init__(self):
        if not (0 <= self.reference_bus < self.bus_count):
            raise ModelError("reference_bus out of range")
        for ln in self.lines:
            if not (0 <= ln.from_bus < self.bus_count and 0 <= ln.to_bus < self.bus_count):
                raise ModelError(f"line {ln.name} references a missing bus")
        if not self._connected():
            raise ModelError("network graph is not connected")

    def _connected(self) -> bool:
        seen = {0}
        frontier = [0]
        adj: dict[int, list[int]] = {b: [] for b in range(self.bus_count)}
        for ln in self.lines:
            adj[ln.from_bus].append(ln.to_bus)
            adj[ln.to_bus].append(ln.from_bus)
        while frontier:
            b = frontier.pop()
            for nb in adj[b]:
                if nb not in seen:
                    seen.add(nb)
                    frontier.append(nb)
        return len(seen) == self.bus_count

    def with_capacity(self, line_index: int, capacity: float | None) -> "Network":
        lines = list(self.lines)
        lines[line_index] = replace(lines[line_index], capacity=capacity)
        return replace(self, lines=tuple(lines))

    def find_line(self, name: str) -> int:
        """Index of a line given '1-3' style 1-based endpoint names."""
        for i, ln in enumerate(self.lines):
            if ln.name == name or f"{ln.to_bus + 1}-{ln.from_bus + 1}" == name:
                return i
        raise ModelError(f"no line named {name!r}")


@dataclass(frozen=True)
class BidProfile:
    quantities: Mapping[str, float]

    def __post_init__(self):
        object.__setattr__(self, "quantities", dict(self.quantities))

    def total(self) -> float:
        return sum(self.quantities.values())

    def replace_bid(self, supplier_id: str, quantity: float) -> "BidProfile":
        q = dict(self.quantities)
        q[supplier_id] = quantity
        return BidProfile(q)


@dataclass(frozen=True)
class LearnerConfig:
    delta_mu: float = 1.0
    delta_sigma: float = 0.2
    c: float = 1e-3
    sigma_floor: float = 0.1
    mu0: float = 600.0
    sigma0: float = 20.0
    iteration_limit: int = 6000
    sigma_rule: str = "absolute"  # or "signed": how x - mu is compared to sigma


@dataclass(frozen=True)
class Scenario:
    name: str
    network: Network
    suppliers: tuple[SupplierParams, ...]
    consumers: tuple[ConsumerParams, ...]
    learner: LearnerConfig = field(default_factory=LearnerConfig)

    def supplier(self, supplier_id: str) -> SupplierParams:
        for s in self.suppliers:
            if s.id == supplier_id:
                return s
        raise ModelError(f"no supplier {supplier_id!r}")

    def validate_bids(self, bids: BidProfile) -> None:
        for s in self.suppliers:
            g = bids.quantities.get(s.id)
            if g is None:
                raise ModelError(f"missing bid for supplier {s.id}")
            if not (s.g_min - 1e-9 <= g <= s.g_max + 1e-9):
                raise ModelError(
                    f"bid {g} for supplier {s.id} outside [{s.g_min}, {s.g_max}]"
                )

    def with_line_cap(self, line_name: str, capacity: float | None) -> "Scenario":
        idx = self.network.find_line(line_name)
        return replace(self, network=self.network.with_capacity(idx, capacity))


def cost_of(supplier: SupplierParams, g: float) -> float:
    """Generation cost in $/h at output g MW."""
    if g < 0:
        raise ModelError("quantity must be nonnegative")
    return 0.5 * supplier.m * g * g + supplier.n * g + supplier.o


def utility_of(consumer: ConsumerParams, d: float) -> float:
    """Consumption utility in $/h at demand d MW."""
    if d < 0:
        raise ModelError("demand must be nonnegative")
    return consumer.w * d - 0.5 * consumer.v * d * d


def profit_of(supplier: SupplierParams, g: float, lmp: float) -> float:
    """Supplier profit in $/h: nodal revenue minus cost."""
    return lmp * g - cost_of(supplier, g)


def load_scenario(source: str | Path | dict, name: str | None = None) -> Scenario:
    """Load a scenario from a JSON file path or an already-parsed dict.

    Schema (1-based bus numbers):
      buses: int
      reference_bus: int
      lines: [{from, to, reactance, capacity|null}, ...]
      suppliers: [{id?, node, m, n, o, g_min?, g_max?}, ...]
      consumers: [{id?, node, w, v}, ...]
      learner: {delta_mu, delta_sigma, c, sigma_floor, mu0, sigma0,
                iteration_limit, sigma_rule}   (all optional)
    """
    if isinstance(source, (str, Path)):
        raw = json.loads(Path(source).read_text())
        name = name or Path(source).stem
    else:
        raw = source
        name = name or raw.get("name", "scenario")

    lines = tuple(
        Line(
            from_bus=int(ln["from"]) - 1,
            to_bus=int(ln["to"]) - 1,
            reactance=float(ln["reactance"]),
            capacity=None if ln.get("capacity") is None else float(ln["capacity"]),
        )
        for ln in raw["lines"]
    )
    network = Network(
        bus_count=int(raw["buses"]),
        lines=lines,
        reference_bus=int(raw["reference_bus"]) - 1,
    )
    suppliers = tuple(
        SupplierParams(
            id=str(s.get("id", f"s{i + 1}")),
            node=int(s["node"]) - 1,
            m=float(s["m"]),
            n=float(s["n"]),
            o=float(s["o"]),
            g_min=float(s.get("g_min", 0.0)),
            g_max=float(s.get("g_max", 2000.0)),
        )
        for i, s in enumerate(raw["suppliers"])
    )
    consumers = tuple(
        ConsumerParams(
            id=str(c.get("id", f"c{i + 1}")),
            node=int(c["node"]) - 1,
            w=float(c["w"]),
            v=float(c["v"]),
        )
        for i, c in enumerate(raw["consumers"])
    )
    learner = LearnerConfig(**raw.get("learner", {}))
    return Scenario(name=name, network=network, suppliers=suppliers,
                    consumers=consumers, learner=learner)


def threebus(congested: bool = False) -> Scenario:
    """The bundled 3-bus test system (one supplier and one consumer per bus).

    With congested=True, line 1-3 is capped at 16 MW in both directions.
    """
    with resources.files("cournotla.scenarios").joinpath("threebus.json").open() as fh:
        scenario = load_scenario(json.load(fh), name="threebus")
    if congested:
        scenario = scenario.with_line_cap("1-3", 16.0)
    return scenario
