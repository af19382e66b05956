"""Gate-level circuit representation for the adder lab.

Circuits are immutable: every builder returns a new ``Circuit``. Analysis helpers
(typed depth, ASAP schedule, Toffoli decomposition, QASM round trip) are pure
functions over that value.
"""
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import networkx as nx
import pyparsing as pp

logger = logging.getLogger(__name__)


class GateKind(str, Enum):
    """Gate kinds; the value doubles as the QASM mnemonic."""
    X = "x"
    CNOT = "cx"
    TOFFOLI = "ccx"
    # Only produced by decompose_toffoli
    H = "h"
    T = "t"
    TDG = "tdg"


GATE_ARITY: Dict[GateKind, int] = {
    GateKind.X: 1,
    GateKind.CNOT: 2,
    GateKind.TOFFOLI: 3,
    GateKind.H: 1,
    GateKind.T: 1,
    GateKind.TDG: 1,
}

CLASSICAL_KINDS = (GateKind.X, GateKind.CNOT, GateKind.TOFFOLI)

INPUT_ROLES = ("a", "b", "cin", "ancilla")
OUTPUT_ROLES = ("sum", "cout")
ROLE_NAMES = INPUT_ROLES + OUTPUT_ROLES

# Any path with one more Toffoli outranks every path with fewer Toffolis
TOFFOLI_WEIGHT = 1_000_000


@dataclass(frozen=True)
class GateOp:
    """One gate instance. The last qubit is the target."""
    kind: GateKind
    qubits: Tuple[int, ...]

    def __post_init__(self):
        kind = GateKind(self.kind)
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "qubits", qubits)
        if len(qubits) != GATE_ARITY[kind]:
            raise ValueError(f"{kind.name} takes {GATE_ARITY[kind]} qubit(s), got {len(qubits)}")
        if len(set(qubits)) != len(qubits):
            raise ValueError(f"{kind.name} on repeated qubit(s) {qubits}")
        if any(q < 0 for q in qubits):
            raise ValueError(f"Negative qubit index in {qubits}")

    @property
    def target(self) -> int:
        return self.qubits[-1]

    @property
    def controls(self) -> Tuple[int, ...]:
        return self.qubits[:-1]


def x_gate(q: int) -> GateOp:
    return GateOp(GateKind.X, (q,))


def cnot(control: int, target: int) -> GateOp:
    return GateOp(GateKind.CNOT, (control, target))


def toffoli(c1: int, c2: int, target: int) -> GateOp:
    return GateOp(GateKind.TOFFOLI, (c1, c2, target))


@dataclass(frozen=True)
class Circuit:
    num_qubits: int
    gates: Tuple[GateOp, ...] = ()
    roles: Dict[str, Tuple[int, ...]] = field(default_factory=dict)

    def role(self, name: str) -> Tuple[int, ...]:
        return self.roles.get(name, ())

    @property
    def measured_qubits(self) -> Tuple[int, ...]:
        """Sum qubits (LSB first) followed by the carry-out qubit when present."""
        return self.role("sum") + self.role("cout")


@dataclass(frozen=True)
class DepthProfile:
    cnot_depth: int = 0
    toffoli_depth: int = 0
    cnot_count: int = 0
    toffoli_count: int = 0
    x_count: int = 0
    single_qubit_count: int = 0


@dataclass(frozen=True)
class Schedule:
    """ASAP timing of a circuit.

    ``idle`` holds, per qubit, the gaps between its first and last busy interval.
    Waiting before the first gate or after the last one is not counted.
    """
    start_times: Tuple[float, ...]
    durations: Tuple[float, ...]
    makespan: float
    busy: Dict[int, List[Tuple[float, float]]]
    idle: Dict[int, List[Tuple[float, float]]]

    def idle_time(self, qubit: int) -> float:
        return sum(end - start for start, end in self.idle.get(qubit, []))

    def end_time(self, gate_index: int) -> float:
        return self.start_times[gate_index] + self.durations[gate_index]


def _validate_roles(num_qubits: int, roles: Mapping[str, Iterable[int]]) -> Dict[str, Tuple[int, ...]]:
    normalized: Dict[str, Tuple[int, ...]] = {}
    for name, indices in roles.items():
        if name not in ROLE_NAMES:
            raise ValueError(f"Unknown role '{name}', expected one of {ROLE_NAMES}")
        indices = tuple(int(q) for q in indices)
        if len(set(indices)) != len(indices):
            raise ValueError(f"Role '{name}' lists a qubit twice: {indices}")
        out_of_range = [q for q in indices if q < 0 or q >= num_qubits]
        if out_of_range:
            raise ValueError(f"Role '{name}' has out-of-range qubits {out_of_range} for {num_qubits} qubits")
        normalized[name] = indices

    if "sum" not in normalized or not normalized["sum"]:
        raise ValueError("Role map must define a non-empty 'sum' role")

    for group in (INPUT_ROLES, OUTPUT_ROLES):
        seen: Dict[int, str] = {}
        for name in group:
            for q in normalized.get(name, ()):
                if q in seen:
                    raise ValueError(f"Roles '{seen[q]}' and '{name}' overlap on qubit {q}")
                seen[q] = name
    return normalized


def new_circuit(num_qubits: int, roles: Mapping[str, Iterable[int]]) -> Circuit:
    """Creates an empty circuit.

    Args:
        num_qubits: Number of qubits, at least 1.
        roles: Role name to qubit indices. Input roles (a, b, cin, ancilla) must be
            pairwise disjoint, as must the output roles (sum, cout); outputs may
            alias inputs.

    Raises:
        ValueError: If the qubit count or the role map is invalid.
    """
    if num_qubits < 1:
        raise ValueError(f"A circuit needs at least one qubit, got {num_qubits}")
    return Circuit(num_qubits=num_qubits, gates=(), roles=_validate_roles(num_qubits, roles))


def _check_bounds(circuit: Circuit, gate: GateOp):
    if max(gate.qubits) >= circuit.num_qubits:
        raise ValueError(f"{gate.kind.name}{gate.qubits} exceeds {circuit.num_qubits}-qubit circuit")


def append(circuit: Circuit, gate: GateOp) -> Circuit:
    _check_bounds(circuit, gate)
    return replace(circuit, gates=circuit.gates + (gate,))


def extend(circuit: Circuit, gates: Iterable[GateOp]) -> Circuit:
    gates = tuple(gates)
    for gate in gates:
        _check_bounds(circuit, gate)
    return replace(circuit, gates=circuit.gates + gates)


def with_preparation(circuit: Circuit, bits: Sequence[int]) -> Circuit:
    """Prepends one X per set bit so the circuit starts from that basis state."""
    if len(bits) != circuit.num_qubits:
        raise ValueError(f"Expected {circuit.num_qubits} input bits, got {len(bits)}")
    prep = tuple(x_gate(q) for q, bit in enumerate(bits) if bit)
    return replace(circuit, gates=prep + circuit.gates)


def dependency_dag(circuit: Circuit) -> nx.DiGraph:
    """Gate dependency DAG: nodes are gate positions, edges join consecutive gates on a qubit."""
    dag = nx.DiGraph()
    last_on_qubit: Dict[int, int] = {}
    for index, gate in enumerate(circuit.gates):
        dag.add_node(index, kind=gate.kind)
        for q in gate.qubits:
            if q in last_on_qubit:
                dag.add_edge(last_on_qubit[q], index)
            last_on_qubit[q] = index
    return dag


def depth_profile(circuit: Circuit) -> DepthProfile:
    """Gate counts plus the CNOT/Toffoli split along the heaviest dependency path."""
    counts = {kind: 0 for kind in GateKind}
    for gate in circuit.gates:
        counts[gate.kind] += 1

    dag = dependency_dag(circuit)
    # best[node] = (score, cnots, toffolis) of the heaviest path ending at node
    best: Dict[int, Tuple[int, int, int]] = {}
    for node in nx.topological_sort(dag):
        kind = dag.nodes[node]["kind"]
        own_cnot = 1 if kind == GateKind.CNOT else 0
        own_toffoli = 1 if kind == GateKind.TOFFOLI else 0
        incoming = max((best[p] for p in dag.predecessors(node)), default=(0, 0, 0))
        best[node] = (
            incoming[0] + own_toffoli * TOFFOLI_WEIGHT + own_cnot,
            incoming[1] + own_cnot,
            incoming[2] + own_toffoli,
        )
    _, cnot_depth, toffoli_depth = max(best.values(), default=(0, 0, 0))

    return DepthProfile(
        cnot_depth=cnot_depth,
        toffoli_depth=toffoli_depth,
        cnot_count=counts[GateKind.CNOT],
        toffoli_count=counts[GateKind.TOFFOLI],
        x_count=counts[GateKind.X],
        single_qubit_count=counts[GateKind.H] + counts[GateKind.T] + counts[GateKind.TDG],
    )


def toffoli_network(c1: int, c2: int, target: int) -> List[GateOp]:
    """Six-CNOT Clifford+T network equal to TOFFOLI(c1, c2 -> target)."""
    h = lambda q: GateOp(GateKind.H, (q,))
    t = lambda q: GateOp(GateKind.T, (q,))
    tdg = lambda q: GateOp(GateKind.TDG, (q,))
    return [
        h(target),
        cnot(c2, target), tdg(target),
        cnot(c1, target), t(target),
        cnot(c2, target), tdg(target),
        cnot(c1, target), t(c2), t(target),
        h(target),
        cnot(c1, c2), t(c1), tdg(c2),
        cnot(c1, c2),
    ]


def decompose_toffoli(circuit: Circuit) -> Circuit:
    gates: List[GateOp] = []
    for gate in circuit.gates:
        if gate.kind == GateKind.TOFFOLI:
            gates.extend(toffoli_network(*gate.qubits))
        else:
            gates.append(gate)
    return replace(circuit, gates=tuple(gates))


def simulate_basis(circuit: Circuit, bits: Sequence[int]) -> List[int]:
    """Runs the reversible gates of ``circuit`` on a computational basis state."""
    if len(bits) != circuit.num_qubits:
        raise ValueError(f"Expected {circuit.num_qubits} bits, got {len(bits)}")
    state = [int(bit) & 1 for bit in bits]
    for gate in circuit.gates:
        if gate.kind == GateKind.X:
            state[gate.target] ^= 1
        elif gate.kind == GateKind.CNOT:
            state[gate.target] ^= state[gate.qubits[0]]
        elif gate.kind == GateKind.TOFFOLI:
            state[gate.target] ^= state[gate.qubits[0]] & state[gate.qubits[1]]
        else:
            raise ValueError(f"{gate.kind.name} is not a classical reversible gate")
    return state


DEFAULT_DURATIONS: Dict[GateKind, float] = {kind: 1.0 for kind in GateKind}


def schedule_asap(circuit: Circuit, durations: Optional[Mapping[GateKind, float]] = None) -> Schedule:
    """Starts every gate as soon as all of its qubits are free.

    Args:
        circuit: Circuit to schedule.
        durations: Duration per gate kind in ticks or seconds. Missing kinds take
            one tick.

    Raises:
        ValueError: If a duration is negative.
    """
    resolved = dict(DEFAULT_DURATIONS)
    for kind, value in (durations or {}).items():
        resolved[GateKind(kind)] = float(value)
    bad = {kind.value: value for kind, value in resolved.items() if value < 0}
    if bad:
        raise ValueError(f"Gate durations must not be negative: {bad}")

    free_at = [0.0] * circuit.num_qubits
    busy: Dict[int, List[Tuple[float, float]]] = {q: [] for q in range(circuit.num_qubits)}
    starts: List[float] = []
    lengths: List[float] = []
    for gate in circuit.gates:
        length = resolved[gate.kind]
        start = max(free_at[q] for q in gate.qubits)
        for q in gate.qubits:
            free_at[q] = start + length
            busy[q].append((start, start + length))
        starts.append(start)
        lengths.append(length)

    idle: Dict[int, List[Tuple[float, float]]] = {}
    for q, intervals in busy.items():
        idle[q] = [
            (prev_end, next_start)
            for (_, prev_end), (next_start, _) in zip(intervals, intervals[1:])
            if next_start > prev_end
        ]

    makespan = max((s + d for s, d in zip(starts, lengths)), default=0.0)
    return Schedule(
        start_times=tuple(starts),
        durations=tuple(lengths),
        makespan=makespan,
        busy=busy,
        idle=idle,
    )


# --- QASM ---------------------------------------------------------------------

QASM_REGISTER_ORDER = ("a", "b", "cin", "cout", "ancilla")


def _register_layout(num_qubits: int, roles: Mapping[str, Sequence[int]]) -> List[Tuple[str, List[int]]]:
    """Physical registers in QASM order; every qubit lands in exactly one."""
    assigned: set = set()
    layout: List[Tuple[str, List[int]]] = []
    for name in ("a", "b", "cin"):
        indices = list(roles.get(name, ()))
        assigned.update(indices)
        layout.append((name, indices))
    cout = [q for q in roles.get("cout", ()) if q not in assigned]
    assigned.update(cout)
    layout.append(("cout", cout))
    layout.append(("ancilla", [q for q in range(num_qubits) if q not in assigned]))
    return [(name, indices) for name, indices in layout if indices]


def export_qasm(circuit: Circuit) -> str:
    lines = ["OPENQASM 2.0;", 'include "qelib1.inc";']
    for name in ROLE_NAMES:
        if name in circuit.roles:
            indices = " ".join(str(q) for q in circuit.roles[name])
            lines.append(f"// role {name}: {indices}")

    location: Dict[int, str] = {}
    for name, indices in _register_layout(circuit.num_qubits, circuit.roles):
        lines.append(f"qreg {name}[{len(indices)}];")
        for offset, q in enumerate(indices):
            location[q] = f"{name}[{offset}]"

    for gate in circuit.gates:
        args = ",".join(location[q] for q in gate.qubits)
        lines.append(f"{gate.kind.value} {args};")
    logger.debug(f"[Export] {len(circuit.gates)} gates on {circuit.num_qubits} qubits")
    return "\n".join(lines) + "\n"


def _build_qasm_grammar():
    ident = pp.Word(pp.alphas + "_", pp.alphanums + "_")
    integer = pp.Word(pp.nums).set_parse_action(lambda t: int(t[0]))
    semi = pp.Suppress(";")
    lbr, rbr = pp.Suppress("["), pp.Suppress("]")

    header = pp.Suppress(pp.Keyword("OPENQASM") + pp.Regex(r"\d+(\.\d+)?") + semi)
    include = pp.Suppress(pp.Keyword("include") + pp.QuotedString('"') + semi)
    qubit = pp.Group(ident("reg") + lbr + integer("index") + rbr)
    qreg = pp.Group(pp.Keyword("qreg")("decl") + ident("name") + lbr + integer("size") + rbr + semi)
    creg = pp.Suppress(pp.Keyword("creg") + ident + lbr + integer + rbr + semi)
    barrier = pp.Suppress(pp.Keyword("barrier") + pp.DelimitedList(qubit | ident) + semi)
    measure = pp.Suppress(pp.Keyword("measure") + qubit + pp.Literal("->") + qubit + semi)
    gate_name = pp.one_of([kind.value for kind in GateKind], as_keyword=True)
    gate = pp.Group(gate_name("op") + pp.Group(pp.DelimitedList(qubit))("args") + semi)

    program = header + pp.ZeroOrMore(include) + pp.ZeroOrMore(qreg | creg | barrier | measure | gate) + pp.StringEnd()
    program.ignore(pp.cpp_style_comment)

    inline_int = pp.Word(pp.nums).set_whitespace_chars(" \t").set_parse_action(lambda t: int(t[0]))
    role_comment = (
        pp.Suppress(pp.Literal("//") + pp.Keyword("role"))
        + ident("role")
        + pp.Suppress(":")
        + pp.Group(pp.ZeroOrMore(inline_int))("indices")
    )
    return program, role_comment


_QASM_PROGRAM, _QASM_ROLE_COMMENT = _build_qasm_grammar()


def import_qasm(text: str) -> Circuit:
    """Parses OpenQASM 2.0 text into a Circuit.

    Role comments written by export_qasm restore the role map and the original
    qubit numbering. Without them, registers are numbered in declaration order and
    registers named after roles become those roles.

    Raises:
        ValueError: On syntax errors, unknown gates or undeclared registers.
    """
    try:
        parsed = _QASM_PROGRAM.parse_string(text)
    except pp.ParseException as e:
        raise ValueError(f"QASM parse error at line {e.lineno}, column {e.col}: {e.msg}") from e

    declared = [(item["name"], item["size"]) for item in parsed if item.get("decl") == "qreg"]
    if not declared:
        last_line = len(text.splitlines())
        raise ValueError(f"QASM declares no qreg (read {last_line} line(s))")
    num_qubits = sum(size for _, size in declared)
    roles = {tokens["role"]: list(tokens["indices"]) for tokens, _, _ in _QASM_ROLE_COMMENT.scan_string(text)}

    registers: Dict[str, List[int]] = {}
    if roles:
        expected = dict(_register_layout(num_qubits, roles))
        for name, size in declared:
            indices = expected.get(name, [])
            if len(indices) != size:
                raise ValueError(f"Register '{name}[{size}]' disagrees with role comments {indices}")
            registers[name] = indices
    else:
        offset = 0
        for name, size in declared:
            registers[name] = list(range(offset, offset + size))
            offset += size
        roles = {name: indices for name, indices in registers.items() if name in ROLE_NAMES}
        if "sum" not in roles:
            roles["sum"] = roles.get("b") or registers[declared[-1][0]]

    circuit = new_circuit(num_qubits, roles)
    gates: List[GateOp] = []
    for item in parsed:
        if item.get("decl") == "qreg":
            continue
        qubits = []
        for ref in item["args"]:
            if ref["reg"] not in registers or ref["index"] >= len(registers[ref["reg"]]):
                raise ValueError(f"Undeclared qubit {ref['reg']}[{ref['index']}]")
            qubits.append(registers[ref["reg"]][ref["index"]])
        gates.append(GateOp(GateKind(item["op"]), tuple(qubits)))
    return extend(circuit, gates)
