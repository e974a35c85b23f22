"""Memory-free simultaneous entanglement distribution on the Bravais network.

Every source fires two Psi+ pairs at once and every terminal performs Bell
measurements on the photon pairs its orientation selects.  A chain is the
alternating source/terminal path a photon pair is relayed along from an X
branch to a Y branch; it delivers one Psi+ pair when all of its ``m + 1``
pairs survive transmission (each with probability ``eta**2``) and all of its
``m`` Bell measurements succeed (each with probability ``gamma``).
"""

from __future__ import annotations

import math
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .bell import PSI_PLUS, BellLabel, PauliCorrection, chain_correction, swap_update
from .channel import DEFAULT_ALPHA, FiberParams, pair_survival, partial_arrival_given_loss
from .rng import stream
from .topology.bravais import (
    BravaisConfig,
    Orientation,
    leg_target,
    opposite_port,
    partner_port,
    port_source,
    site_ports,
)

__all__ = [
    "Chain",
    "TraceResult",
    "trace_chains",
    "reachable_pairs",
    "ChainOutcome",
    "RoundOutcome",
    "simulate_round",
    "YieldEstimate",
    "estimate_yield",
    "analytic_yield",
    "analytic_yield_by_span",
    "chain_success_probability",
    "yield_surface",
    "YIELD_PANELS",
    "Scenario",
    "load_scenario",
    "dump_scenario",
    "ScenarioFormatError",
    "FAILURE_SCENARIOS",
    "NAMED_PATHS",
    "BLOCK_ROUNDS",
]

BLOCK_ROUNDS = 4096


@dataclass(frozen=True)
class Chain:
    x_branch: int
    y_branch: int
    sources: tuple[tuple[int, int], ...]
    terminals: tuple[tuple[int, int], ...]

    @property
    def num_terminals(self) -> int:
        return len(self.terminals)

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.x_branch, self.y_branch)


@dataclass(frozen=True)
class TraceResult:
    chains: tuple[Chain, ...]
    diagnostics: tuple[str, ...] = ()

    def __iter__(self):
        return iter(self.chains)

    def __len__(self):
        return len(self.chains)

    def __getitem__(self, k):
        return self.chains[k]

    def pairs(self) -> set[tuple[int, int]]:
        return {c.endpoints for c in self.chains}


def _terminal_exit(config: BravaisConfig, c: int, r: int, port: str) -> str | None:
    ports = site_ports(config, c, r)
    if port not in ports:
        return None
    if len(ports) == 2:
        # an edge terminal only ever holds two photons and measures them together
        return ports[0] if ports[1] == port else ports[1]
    out = partner_port(config.terminal_orientation(c, r), port)
    return out if out in ports else None


def _walk(config: BravaisConfig, c: int, r: int, port: str):
    """Follow a photon path leaving site ``(c, r)`` through ``port``.

    Returns ``(end_site, sources, terminals, problem)``; ``problem`` is None
    when the path reached a branch.
    """
    sources: list[tuple[int, int]] = []
    terminals: list[tuple[int, int]] = []
    limit = 4 * (config.M + 2) * config.N + 4
    for _ in range(limit):
        src = port_source(config, c, r, port)
        if src is None:
            return (c, r), sources, terminals, f"port {port} of site {(c, r)} has no source"
        if src in config.failed_sources:
            return (c, r), sources, terminals, f"source {src} failed"
        sources.append(src)
        leg = partner_port(config.source_orientation(*src), opposite_port(port))
        c, r = leg_target(*src, leg)
        arrival = opposite_port(leg)
        if c == 0 or c == config.M + 1:
            return (c, r), sources, terminals, None
        if (c, r) in config.failed_terminals:
            return (c, r), sources, terminals, f"terminal {(c, r)} failed"
        out = _terminal_exit(config, c, r, arrival)
        if out is None:
            return (c, r), sources, terminals, (
                f"terminal {(c, r)} orientation {config.terminal_orientation(c, r).value} "
                f"pairs port {arrival} with a port no source feeds"
            )
        terminals.append((c, r))
        port = out
    return (c, r), sources, terminals, "path does not terminate"


def trace_chains(config: BravaisConfig) -> TraceResult:
    """All X-to-Y chains induced by the orientation maps and failure sets.

    Paths are followed from every X-branch port.  Paths that end on another
    X branch, hit a failed node, or are fed into a port with no source are
    dropped and reported in ``diagnostics``.
    """
    chains = []
    notes = []
    for r in range(1, config.N + 1):
        for port in ("LR", "UR"):
            if port_source(config, 0, r, port) is None:
                continue
            (c_end, r_end), srcs, terms, problem = _walk(config, 0, r, port)
            if problem is not None:
                notes.append(f"X{r} via {port}: {problem}; chain dropped")
            elif c_end == 0:
                notes.append(f"X{r} via {port}: path returns to X{r_end}; chain dropped")
            else:
                chains.append(Chain(r, r_end, tuple(srcs), tuple(terms)))
    # Y-to-Y loops are invisible from the X side; report them too
    for r in range(1, config.N + 1):
        for port in ("LL", "UL"):
            if port_source(config, config.M + 1, r, port) is None:
                continue
            (c_end, r_end), _, _, problem = _walk(config, config.M + 1, r, port)
            if problem is None and c_end == config.M + 1:
                notes.append(f"Y{r} via {port}: path returns to Y{r_end}; chain dropped")
    chains.sort(key=lambda ch: (ch.x_branch, ch.y_branch, ch.sources))
    return TraceResult(tuple(chains), tuple(notes))


def reachable_pairs(config: BravaisConfig, free_terminals: bool = True) -> set[tuple[int, int]]:
    """``(x, y)`` branch pairs joined by some photon path.

    Source orientations and failures are taken from ``config``.  With
    ``free_terminals`` every interior terminal may pair its ports in any of
    the three orientations; otherwise the configured ones are used.
    """
    found = set()
    for x in range(1, config.N + 1):
        start = [(0, x, p) for p in ("LR", "UR") if port_source(config, 0, x, p) is not None]
        seen = set(start)
        queue = deque(start)
        while queue:
            c, r, port = queue.popleft()
            src = port_source(config, c, r, port)
            if src is None or src in config.failed_sources:
                continue
            leg = partner_port(config.source_orientation(*src), opposite_port(port))
            c2, r2 = leg_target(*src, leg)
            arrival = opposite_port(leg)
            if c2 == config.M + 1:
                found.add((x, r2))
                continue
            if c2 == 0 or (c2, r2) in config.failed_terminals:
                continue
            ports = site_ports(config, c2, r2)
            if free_terminals and len(ports) > 2:
                exits = [p for p in ports if p != arrival]
            else:
                out = _terminal_exit(config, c2, r2, arrival)
                exits = [] if out is None else [out]
            for p in exits:
                if (c2, r2, p) not in seen:
                    seen.add((c2, r2, p))
                    queue.append((c2, r2, p))
    return found


# --- single rounds ---------------------------------------------------------

@dataclass(frozen=True)
class ChainOutcome:
    succeeded: bool
    final_label: BellLabel
    applied_correction: PauliCorrection
    outcomes: tuple[BellLabel, ...] = ()


@dataclass(frozen=True)
class RoundOutcome:
    chains: tuple[ChainOutcome, ...]

    @property
    def delivered(self) -> int:
        return sum(c.succeeded for c in self.chains)


def simulate_round(
    chains: Iterable[Chain], params: FiberParams, eta: float, rng: np.random.Generator
) -> RoundOutcome:
    """One protocol round, chain by chain.

    ``final_label`` is the end-to-end label after the Pauli correction; it is
    Psi+ for every successful chain.
    """
    p_pair = pair_survival(eta)
    out = []
    for chain in chains:
        m = chain.num_terminals
        arrived = bool(np.all(rng.random(m + 1) < p_pair))
        measured = bool(np.all(rng.random(m) < params.gamma))
        if not (arrived and measured):
            out.append(ChainOutcome(False, PSI_PLUS, PauliCorrection(0, 0)))
            continue
        codes = rng.integers(0, 4, size=m)
        labels = tuple(BellLabel(int(k) >> 1, int(k) & 1) for k in codes)
        state = PSI_PLUS
        for lab in labels:
            state = swap_update(state, PSI_PLUS, lab)
        corr = chain_correction(labels)
        final = state ^ BellLabel(corr.x_power, corr.z_power)
        out.append(ChainOutcome(True, final, corr, labels))
    return RoundOutcome(tuple(out))


# --- Monte Carlo yield -------------------------------------------------------

@dataclass(frozen=True)
class YieldEstimate:
    mean: float
    std_error: float
    trials: int
    analytic: float
    per_chain_success: tuple[float, ...] = ()
    frame_errors: int = 0
    pair_losses: int = 0
    partial_arrivals: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.std_error < 0:
            raise ValueError("std_error must be non-negative")

    def within(self, k: float = 3.0) -> bool:
        """Whether the analytic value lies within ``k`` standard errors."""
        if self.std_error == 0:
            return abs(self.mean - self.analytic) <= 1e-12 * max(1.0, abs(self.analytic))
        return abs(self.mean - self.analytic) <= k * self.std_error


def chain_success_probability(m: int, gamma: float, eta: float) -> float:
    return gamma**m * pair_survival(eta) ** (m + 1)


def _block(chains, p_pair, gamma, eta, seed, block, rounds, diagnostics):
    rng = stream(seed, block)
    total = np.zeros(rounds, dtype=np.int64)
    per_chain = np.zeros(len(chains), dtype=np.int64)
    frame_errors = losses = partial = 0
    for k, chain in enumerate(chains):
        m = chain.num_terminals
        arrived = rng.random((rounds, m + 1)) < p_pair
        ok = arrived.all(axis=1) & (rng.random((rounds, m)) < gamma).all(axis=1)
        codes = rng.integers(0, 4, size=(rounds, m))
        if m:
            label = np.bitwise_xor.reduce(codes, axis=1)
            x_power = np.bitwise_xor.reduce(codes >> 1, axis=1)
            z_power = np.bitwise_xor.reduce(codes & 1, axis=1)
        else:
            label = x_power = z_power = np.zeros(rounds, dtype=np.int64)
        # Z^z X^x on one qubit flips the label bits (x, z); Psi+ must remain
        residual = label ^ ((x_power << 1) | z_power)
        frame_errors += int(np.count_nonzero(ok & (residual != 0)))
        total += ok
        per_chain[k] = int(ok.sum())
        if diagnostics:
            lost = ~arrived
            n_lost = int(lost.sum())
            losses += n_lost
            partial += int((rng.random(n_lost) < partial_arrival_given_loss(eta)).sum())
    return total, per_chain, frame_errors, losses, partial


def estimate_yield(
    config: BravaisConfig,
    rounds: int,
    seed: int,
    chains: Sequence[Chain] | None = None,
    workers: int = 1,
    diagnostics: bool = False,
    block_rounds: int = BLOCK_ROUNDS,
) -> YieldEstimate:
    """Monte Carlo mean pairs per round.

    Rounds are split into fixed blocks, block ``k`` drawing from stream
    ``(seed, k)``, and merged in block order, so the result does not depend
    on ``workers``.
    """
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    if chains is None:
        chains = trace_chains(config).chains
    chains = tuple(chains)
    eta = config.eta
    p_pair = pair_survival(eta)
    sizes = [min(block_rounds, rounds - s) for s in range(0, rounds, block_rounds)]
    jobs = [(chains, p_pair, config.gamma, eta, seed, k, n, diagnostics) for k, n in enumerate(sizes)]
    if workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda a: _block(*a), jobs))
    else:
        results = [_block(*a) for a in jobs]

    s1 = s2 = 0
    per_chain = np.zeros(len(chains), dtype=np.int64)
    frame_errors = losses = partial = 0
    for total, pc, fe, lo, pa in results:
        s1 += int(total.sum())
        s2 += int((total * total).sum())
        per_chain += pc
        frame_errors += fe
        losses += lo
        partial += pa
    mean = s1 / rounds
    var = (s2 - s1 * s1 / rounds) / (rounds - 1) if rounds > 1 else 0.0
    se = math.sqrt(max(var, 0.0) / rounds)
    analytic = sum(chain_success_probability(c.num_terminals, config.gamma, eta) for c in chains)
    return YieldEstimate(
        mean=mean,
        std_error=se,
        trials=rounds,
        analytic=analytic,
        per_chain_success=tuple(float(x) / rounds for x in per_chain),
        frame_errors=frame_errors,
        pair_losses=losses,
        partial_arrivals=partial,
    )


def analytic_yield(N: int, M: int, gamma: float, alpha: float, ell: float) -> float:
    """``2 (N-1) gamma^M exp(-2 alpha ell (M+1))``."""
    return 2 * (N - 1) * gamma**M * math.exp(-2.0 * alpha * ell * (M + 1))


def analytic_yield_by_span(N: int, M: int, gamma: float, alpha: float, L: float, theta: float) -> float:
    """Same yield written with the company separation ``L = 2 ell (M+1) cos(theta)``."""
    return 2 * (N - 1) * gamma**M * math.exp(-alpha * L / math.cos(theta))


# name -> (gamma, M)
YIELD_PANELS = {"a": (0.5, 1), "b": (0.5, 2), "c": (0.9, 1), "d": (1.0, 2)}


def yield_surface(
    L_values: Sequence[float],
    N_values: Sequence[int],
    panels: Sequence[str] = tuple(YIELD_PANELS),
    theta: float = math.pi / 4,
    alpha: float = DEFAULT_ALPHA,
) -> list[tuple[str, float, int, float, int, float]]:
    """Rows ``(panel, gamma, M, L, N, xi)`` for plotting yield against span."""
    rows = []
    for name in panels:
        gamma, M = YIELD_PANELS[name]
        for L in L_values:
            for N in N_values:
                rows.append((name, gamma, M, float(L), int(N),
                             analytic_yield_by_span(N, M, gamma, alpha, L, theta)))
    return rows


# --- failure scenarios -------------------------------------------------------

class ScenarioFormatError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


@dataclass(frozen=True)
class Scenario:
    """Static failure sets and orientation overrides for one network."""

    failed_sources: frozenset[tuple[int, int]] = frozenset()
    failed_terminals: frozenset[tuple[int, int]] = frozenset()
    source_orientations: tuple[tuple[tuple[int, int], Orientation], ...] = ()
    terminal_orientations: tuple[tuple[tuple[int, int], Orientation], ...] = ()

    def apply(self, config: BravaisConfig) -> BravaisConfig:
        src = dict(config.source_orientations)
        src.update(self.source_orientations)
        term = dict(config.terminal_orientations)
        term.update(self.terminal_orientations)
        return config.with_changes(
            failed_sources=config.failed_sources | self.failed_sources,
            failed_terminals=config.failed_terminals | self.failed_terminals,
            source_orientations=src,
            terminal_orientations=term,
        )


_SCENARIO_HEADER = "# entanglenet scenario v1"


def dump_scenario(scenario: Scenario) -> str:
    lines = [_SCENARIO_HEADER]
    lines += [f"fail_source {i} {j}" for i, j in sorted(scenario.failed_sources)]
    lines += [f"fail_terminal {c} {r}" for c, r in sorted(scenario.failed_terminals)]
    lines += [f"source_orientation {i} {j} {o.value}" for (i, j), o in scenario.source_orientations]
    lines += [f"terminal_orientation {c} {r} {o.value}" for (c, r), o in scenario.terminal_orientations]
    return "\n".join(lines) + "\n"


def load_scenario(text: str) -> Scenario:
    fs, ft, so, to = set(), set(), [], []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, *rest = line.split()
        try:
            if key == "fail_source":
                fs.add((int(rest[0]), int(rest[1])))
            elif key == "fail_terminal":
                ft.add((int(rest[0]), int(rest[1])))
            elif key == "source_orientation":
                so.append(((int(rest[0]), int(rest[1])), Orientation.parse(rest[2])))
            elif key == "terminal_orientation":
                to.append(((int(rest[0]), int(rest[1])), Orientation.parse(rest[2])))
            else:
                raise ScenarioFormatError(line_no, f"unknown record {key!r}")
        except ScenarioFormatError:
            raise
        except (ValueError, IndexError) as exc:
            raise ScenarioFormatError(line_no, f"malformed {key!r} record: {exc}") from None
    return Scenario(frozenset(fs), frozenset(ft), tuple(so), tuple(to))


# On the N=5, M=4 network with default orientations, branch X2 feeds two
# chains: "green" climbs to Y3 and "blue" bounces off the bottom row to Y5.
NAMED_PATHS = {"green": (2, 3), "blue": (2, 5)}

# Each scenario knocks out one terminal and the next source along one of
# the two paths; the other path never touches either node.
FAILURE_SCENARIOS = {
    "a": Scenario(failed_sources=frozenset({(3, 4)}), failed_terminals=frozenset({(2, 4)})),
    "b": Scenario(failed_sources=frozenset({(3, 2)}), failed_terminals=frozenset({(2, 2)})),
}
