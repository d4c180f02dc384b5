"""Quasi-1D chiral lattices: geometry presets, hopping disorder, field Hamiltonian.

Every geometry has three sites per unit cell, labelled ``a``, ``b``, ``c``
and stored cell-major (site index ``3*n + label``). The ``a`` and ``c`` sites
make up the majority sublattice, i.e. the sites carrying the zero-energy flat
band; ``b`` sites are the minority sublattice.

Connectivity per cell ``n`` (indices mod ``N`` with periodic boundaries):

* double comb: ``a_n-b_n`` (v1), ``c_n-b_n`` (v2), ``b_n-b_{n+1}`` (J)
* diamond:     ``a_n-b_n``, ``c_n-b_n``, ``a_n-b_{n+1}``, ``c_n-b_{n+1}`` (all J)
* stub:        ``a_n-b_n`` (v), ``b_n-c_n`` (J), ``c_n-b_{n+1}`` (J)

All energies are in units of the backbone hopping ``J``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import AlreadyDisordered, BadParams, EvenDiamond, WidthTooLarge

LABELS = ("a", "b", "c")


class Kind(str, enum.Enum):
    DOUBLE_COMB = "double_comb"
    DIAMOND = "diamond"
    STUB = "stub"

    @classmethod
    def parse(cls, text: str) -> "Kind":
        key = text.strip().lower().replace("-", "_")
        aliases = {"doublecomb": "double_comb", "comb": "double_comb", "rhombus": "diamond"}
        key = aliases.get(key, key)
        try:
            return cls(key)
        except ValueError:
            raise BadParams(f"unknown geometry {text!r}") from None


@dataclass(frozen=True)
class Geometry:
    """Geometry preset.

    ``v1``/``v2`` are the double-comb tooth couplings (``r = v2/v1``) and ``v``
    the stub's vertical coupling (``eta = v/J``). Parameters not used by
    ``kind`` are ignored.
    """

    kind: Kind
    cells: int
    J: float = 1.0
    v1: float = 1.0
    v2: float = 1.0
    v: float = 1.0
    periodic: bool = True

    @property
    def eta(self) -> float:
        return self.v / self.J

    @property
    def r(self) -> float:
        return self.v2 / self.v1

    @property
    def n_sites(self) -> int:
        return 3 * self.cells

    def check(self) -> None:
        """Raise if the geometry violates its invariants."""
        if self.cells < 3:
            raise BadParams(f"need at least 3 cells, got {self.cells}")
        couplings = {"J": self.J}
        if self.kind is Kind.DOUBLE_COMB:
            couplings.update(v1=self.v1, v2=self.v2)
        elif self.kind is Kind.STUB:
            couplings.update(v=self.v)
        for name, value in couplings.items():
            if not (np.isfinite(value) and value > 0):
                raise BadParams(f"coupling {name} must be strictly positive, got {value}")
        if self.kind is Kind.DIAMOND and self.periodic and self.cells % 2 == 0:
            raise EvenDiamond(
                f"periodic diamond chain needs an odd number of cells, got {self.cells}"
            )


def site_index(cell: int, label: str, cells: int | None = None) -> int:
    """Cell-major index of site ``(cell, label)``; wraps ``cell`` when ``cells`` is given."""
    if cells is not None:
        cell %= cells
    return 3 * cell + LABELS.index(label)


def _frozen(arr):
    arr = np.array(arr)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Lattice:
    """One realization of a lattice: undirected weighted edges plus onsite terms.

    ``edges[k] = (x, x')`` with ``x < x'`` is stored once; ``roles[k]`` names
    the base coupling (``"J"``, ``"v1"``, ``"v2"`` or ``"v"``) it derives from.
    """

    geometry: Geometry
    edges: np.ndarray
    couplings: np.ndarray
    roles: tuple
    onsite: np.ndarray
    disordered: bool = False
    tags: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "edges", _frozen(np.asarray(self.edges, dtype=np.int64)))
        object.__setattr__(self, "couplings", _frozen(np.asarray(self.couplings, dtype=np.float64)))
        object.__setattr__(self, "onsite", _frozen(np.asarray(self.onsite, dtype=np.float64)))

    @property
    def n_sites(self) -> int:
        return self.geometry.n_sites

    @property
    def cells(self) -> int:
        return self.geometry.cells

    @property
    def sites(self) -> list[tuple[int, str]]:
        return [(n, lab) for n in range(self.cells) for lab in LABELS]

    @property
    def majority(self) -> np.ndarray:
        """Boolean mask of flat-band (``a``/``c``) sites."""
        mask = np.ones(self.n_sites, dtype=bool)
        mask[1::3] = False
        return mask

    @property
    def minority(self) -> np.ndarray:
        return ~self.majority

    def index(self, cell: int, label: str) -> int:
        if label not in LABELS or not 0 <= cell < self.cells:
            raise IndexError(f"no site ({cell}, {label!r}) in a {self.cells}-cell lattice")
        return site_index(cell, label)

    def coupling(self, x: int, y: int) -> float:
        """Hopping between sites ``x`` and ``y`` (0.0 if not connected)."""
        lo, hi = min(x, y), max(x, y)
        hit = np.flatnonzero((self.edges[:, 0] == lo) & (self.edges[:, 1] == hi))
        return float(self.couplings[hit[0]]) if hit.size else 0.0

    def bipartition(self) -> np.ndarray | None:
        """Two-colouring of the hopping graph by breadth-first search.

        Returns an array of ``+1``/``-1`` per site, or ``None`` if the graph
        contains an odd cycle. Isolated sites are coloured ``+1``.
        """
        s = self.n_sites
        nbrs = [[] for _ in range(s)]
        for x, y in self.edges:
            nbrs[x].append(y)
            nbrs[y].append(x)
        colour = np.zeros(s, dtype=np.int64)
        for start in range(s):
            if colour[start]:
                continue
            colour[start] = 1
            queue = [start]
            while queue:
                x = queue.pop()
                for y in nbrs[x]:
                    if colour[y] == 0:
                        colour[y] = -colour[x]
                        queue.append(y)
                    elif colour[y] == colour[x]:
                        return None
        return colour

    def same_as(self, other: "Lattice") -> bool:
        """Bit-exact equality of topology, couplings and onsite terms."""
        return (
            self.geometry == other.geometry
            and np.array_equal(self.edges, other.edges)
            and self.couplings.tobytes() == other.couplings.tobytes()
            and self.onsite.tobytes() == other.onsite.tobytes()
        )

    def base_couplings(self, cell: int) -> dict[str, float]:
        """Realized couplings of the edges owned by ``cell``, keyed by role."""
        out = {}
        for (x, y), role, value in zip(self.edges, self.roles, self.couplings):
            if role in ("v1", "v2", "v") and min(x, y) // 3 == cell:
                out[role] = float(value)
        return out


def _edge_list(geometry: Geometry):
    n_cells = geometry.cells
    g = geometry
    edges, roles, values = [], [], []

    def add(c1, l1, c2, l2, role, value):
        if not g.periodic and (c1 >= n_cells or c2 >= n_cells):
            return
        x = site_index(c1, l1, n_cells)
        y = site_index(c2, l2, n_cells)
        edges.append((min(x, y), max(x, y)))
        roles.append(role)
        values.append(value)

    for n in range(n_cells):
        if g.kind is Kind.DOUBLE_COMB:
            add(n, "a", n, "b", "v1", g.v1)
            add(n, "b", n, "c", "v2", g.v2)
            add(n, "b", n + 1, "b", "J", g.J)
        elif g.kind is Kind.DIAMOND:
            add(n, "a", n, "b", "J", g.J)
            add(n, "b", n, "c", "J", g.J)
            add(n, "a", n + 1, "b", "J", g.J)
            add(n, "c", n + 1, "b", "J", g.J)
        else:
            add(n, "a", n, "b", "v", g.v)
            add(n, "b", n, "c", "J", g.J)
            add(n, "c", n + 1, "b", "J", g.J)
    return edges, roles, values


def build_lattice(geometry: Geometry) -> Lattice:
    """Build the clean lattice for ``geometry``.

    Raises
    ------
    EvenDiamond
        Periodic diamond chain with an even number of cells.
    BadParams
        Fewer than 3 cells or a non-positive coupling.
    """
    geometry.check()
    edges, roles, values = _edge_list(geometry)
    if len(set(edges)) != len(edges):
        raise BadParams("duplicate edges; increase the number of cells")
    return Lattice(
        geometry=geometry,
        edges=np.array(edges, dtype=np.int64).reshape(-1, 2),
        couplings=np.array(values, dtype=np.float64),
        roles=tuple(roles),
        onsite=np.zeros(geometry.n_sites),
    )


@dataclass(frozen=True)
class DisorderSpec:
    """Off-diagonal disorder ``J -> (1 + delta) J``, ``delta ~ U[-W/2, W/2]``.

    ``width`` above 2 lets couplings change sign and is refused unless
    ``allow_sign_change`` is set. ``onsite`` is the width of an optional
    uniform onsite (diagonal) disorder; it breaks chiral symmetry and is off
    by default. ``realization`` selects an independent stream for the same
    master ``seed``.
    """

    width: float = 0.0
    seed: int = 0
    realization: int = 0
    onsite: float = 0.0
    allow_sign_change: bool = False

    def check(self) -> None:
        if not np.isfinite(self.width) or self.width < 0:
            raise WidthTooLarge(f"disorder width must be finite and >= 0, got {self.width}")
        if self.width > 2 and not self.allow_sign_change:
            raise WidthTooLarge(
                f"W={self.width} > 2 allows vanishing or negative couplings; "
                "set allow_sign_change to permit it"
            )
        if not np.isfinite(self.onsite) or self.onsite < 0:
            raise WidthTooLarge(f"onsite disorder width must be finite and >= 0, got {self.onsite}")


def disorder_stream(seed: int, realization: int) -> np.random.Generator:
    """Counter-based stream for one realization.

    Philox4x64-10 keyed by ``(seed mod 2**64, realization)``; the counter starts
    at zero. Streams for different keys are independent and the sequence is
    platform independent.
    """
    key = np.array([int(seed) % 2**64, int(realization) % 2**64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def open_uniform(rng: np.random.Generator, size: int) -> np.ndarray:
    """Uniform draws on the open interval (0, 1) with 53-bit resolution."""
    k = rng.integers(0, 2**53, size=size, dtype=np.uint64)
    return (k.astype(np.float64) + 0.5) * 2.0**-53


def apply_disorder(lattice: Lattice, spec: DisorderSpec) -> Lattice:
    """Rescale every coupling independently by ``1 + delta``.

    Edge topology is untouched. Draws are consumed in edge order, then (if
    enabled) one onsite draw per site in site order.
    """
    spec.check()
    if lattice.disordered:
        raise AlreadyDisordered("apply_disorder expects a disorder-free lattice")
    if spec.width == 0 and spec.onsite == 0:
        return lattice
    rng = disorder_stream(spec.seed, spec.realization)
    delta = spec.width * (open_uniform(rng, len(lattice.couplings)) - 0.5)
    couplings = lattice.couplings * (1.0 + delta)
    onsite = lattice.onsite
    if spec.onsite > 0:
        onsite = onsite + spec.onsite * (open_uniform(rng, lattice.n_sites) - 0.5)
    return replace(
        lattice,
        couplings=couplings,
        onsite=onsite,
        disordered=True,
        tags={"width": spec.width, "seed": spec.seed, "realization": spec.realization},
    )


def field_hamiltonian(lattice: Lattice) -> np.ndarray:
    """Dense single-photon hopping matrix, ``H[x, x'] = J_{x,x'}``."""
    s = lattice.n_sites
    h = np.zeros((s, s))
    i, j = lattice.edges[:, 0], lattice.edges[:, 1]
    h[i, j] = lattice.couplings
    h[j, i] = lattice.couplings
    h[np.arange(s), np.arange(s)] = lattice.onsite
    return h


def chiral_operator(lattice: Lattice) -> np.ndarray | None:
    """Diagonal of the sign operator ``D`` with ``D H D = -H``, or ``None``.

    Built from the graph two-colouring, so it exists whenever the hopping
    graph is bipartite and the onsite terms vanish.
    """
    if np.any(lattice.onsite != 0):
        return None
    return lattice.bipartition()


def dump_lattice(lattice: Lattice) -> str:
    """Plain-text edge list: header ``S N geometry``, then ``x x' coupling`` lines."""
    lines = [f"{lattice.n_sites} {lattice.cells} {lattice.geometry.kind.value}"]
    for (x, y), value in zip(lattice.edges, lattice.couplings):
        lines.append(f"{x} {y} {value:.17g}")
    return "\n".join(lines) + "\n"


def load_edge_list(text: str) -> tuple[int, int, str, np.ndarray, np.ndarray]:
    """Parse :func:`dump_lattice` output into ``(S, N, kind, edges, couplings)``."""
    rows = [ln.split() for ln in text.splitlines() if ln.strip()]
    s, n, kind = int(rows[0][0]), int(rows[0][1]), rows[0][2]
    edges = np.array([[int(r[0]), int(r[1])] for r in rows[1:]], dtype=np.int64).reshape(-1, 2)
    couplings = np.array([float(r[2]) for r in rows[1:]])
    return s, n, kind, edges, couplings
