"""Generators and classical semantics for the exact and approximate adders.

Qubit layout (LSB first inside every register):
    a       0 .. n-1
    b       n .. 2n-1
    cin     2n              (CQA0, CQA1)
    cout    2n (TPL13, AQA5) or 2n+1 (CQA1); b[n-1] for AQA3/AQA4

Sum lands on b for CQA0, CQA1, TPL13, AQA2 and AQA5, and on a for AQA1, AQA3 and
AQA4. AQA4 writes a XOR b into a (CNOT b_i -> a_i) so that b[n-1] survives as
its carry-out.
"""
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Dict, List, Optional, Tuple

from circuit_core import (
    Circuit,
    GateOp,
    cnot,
    depth_profile,
    extend,
    new_circuit,
    simulate_basis,
    toffoli,
)

logger = logging.getLogger(__name__)

MAX_VERIFY_BITS = 6


class AdderFamily(str, Enum):
    CQA0 = "cqa0"
    CQA1 = "cqa1"
    TPL13 = "tpl13"
    AQA1 = "aqa1"
    AQA2 = "aqa2"
    AQA3 = "aqa3"
    AQA4 = "aqa4"
    AQA5 = "aqa5"


EXACT_FAMILIES = (AdderFamily.CQA0, AdderFamily.CQA1, AdderFamily.TPL13)
APPROXIMATE_FAMILIES = (AdderFamily.AQA1, AdderFamily.AQA2, AdderFamily.AQA3, AdderFamily.AQA4, AdderFamily.AQA5)
CARRYLESS_FAMILIES = (AdderFamily.CQA0, AdderFamily.AQA1, AdderFamily.AQA2)
CIN_FAMILIES = (AdderFamily.CQA0, AdderFamily.CQA1)


def parse_family(name) -> AdderFamily:
    if isinstance(name, AdderFamily):
        return name
    try:
        return AdderFamily(str(name).lower())
    except ValueError as e:
        valid = ", ".join(f.value for f in AdderFamily)
        raise ValueError(f"Unknown adder family '{name}' (expected one of {valid})") from e


@dataclass(frozen=True)
class AdderSpec:
    family: AdderFamily
    n: int
    has_cout: bool = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "family", parse_family(self.family))
        if int(self.n) < 1:
            raise ValueError(f"Bit width must be at least 1, got {self.n}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "has_cout", self.family not in CARRYLESS_FAMILIES)

    @property
    def accepts_cin(self) -> bool:
        return self.family in CIN_FAMILIES

    @property
    def is_exact(self) -> bool:
        return self.family in EXACT_FAMILIES

    @property
    def label(self) -> str:
        return f"{self.family.value}(n={self.n})"


@dataclass(frozen=True)
class Table2Row:
    """Closed-form design characteristics of one family at width n."""
    family: AdderFamily
    n: int
    sum_expr: str
    carry_expr: str
    qubits: int
    cnot_depth: int
    toffoli_depth: int
    cnot_count: int
    toffoli_count: int


SUM_EXPRESSIONS: Dict[AdderFamily, Tuple[str, str]] = {
    AdderFamily.CQA0: ("A+B+Cin (mod 2^n)", "-"),
    AdderFamily.CQA1: ("A+B+Cin", "carry of A+B+Cin"),
    AdderFamily.TPL13: ("A+B", "carry of A+B"),
    AdderFamily.AQA1: ("s_i = a_i", "-"),
    AdderFamily.AQA2: ("s_i = a_i XOR b_i", "-"),
    AdderFamily.AQA3: ("s_i = a_i", "c_n = b_{n-1}"),
    AdderFamily.AQA4: ("s_i = a_i XOR b_i", "c_n = b_{n-1}"),
    AdderFamily.AQA5: ("s_i = a_i XOR b_i", "c_n = a_{n-1} AND b_{n-1}"),
}


def table2_row(family, n: int) -> Table2Row:
    family = parse_family(family)
    # (qubits, cnot_depth, toffoli_depth, cnot_count, toffoli_count)
    closed_forms = {
        AdderFamily.CQA0: (2 * n + 1, 3 * n + 1, 2 * n, 4 * n, 2 * n),
        AdderFamily.CQA1: (2 * n + 2, 3 * n + 2, 2 * n, 4 * n + 1, 2 * n),
        AdderFamily.TPL13: (2 * n + 1, 3 * n - 2, 2 * n - 1, 5 * n - 5, 2 * n - 1),
        AdderFamily.AQA1: (2 * n, 0, 0, 0, 0),
        AdderFamily.AQA2: (2 * n, 1, 0, n, 0),
        AdderFamily.AQA3: (2 * n, 0, 0, 0, 0),
        AdderFamily.AQA4: (2 * n, 1, 0, n, 0),
        AdderFamily.AQA5: (2 * n + 1, 1, 1, n, 1),
    }
    qubits, cnot_depth, toffoli_depth, cnot_count, toffoli_count = closed_forms[family]
    sum_expr, carry_expr = SUM_EXPRESSIONS[family]
    return Table2Row(family, n, sum_expr, carry_expr, qubits, cnot_depth, toffoli_depth, cnot_count, toffoli_count)


# --- layouts --------------------------------------------------------------------

def _a(n: int) -> List[int]:
    return list(range(n))


def _b(n: int) -> List[int]:
    return list(range(n, 2 * n))


def _majority(c: int, b: int, a: int) -> List[GateOp]:
    return [cnot(a, b), cnot(a, c), toffoli(c, b, a)]


def _unmajority_add(c: int, b: int, a: int) -> List[GateOp]:
    return [toffoli(c, b, a), cnot(a, c), cnot(c, b)]


def _ripple_gates(n: int, cin: int, cout: Optional[int]) -> List[GateOp]:
    a, b = _a(n), _b(n)
    carries = [cin] + a[:-1]
    gates: List[GateOp] = []
    for i in range(n):
        gates.extend(_majority(carries[i], b[i], a[i]))
    if cout is not None:
        gates.append(cnot(a[-1], cout))
    for i in reversed(range(n)):
        gates.extend(_unmajority_add(carries[i], b[i], a[i]))
    return gates


def _takahashi_gates(n: int, z: int) -> List[GateOp]:
    a, b = _a(n), _b(n)
    if n == 1:
        return [toffoli(a[0], b[0], z), cnot(a[0], b[0])]
    chain = a + [z]  # chain[i + 1] receives the carry out of bit i
    gates: List[GateOp] = []
    gates += [cnot(a[i], b[i]) for i in range(1, n)]
    gates.append(cnot(a[n - 1], z))
    gates += [cnot(a[i], a[i + 1]) for i in range(n - 2, 0, -1)]
    gates += [toffoli(a[i], b[i], chain[i + 1]) for i in range(n)]
    for i in range(n - 1, 0, -1):
        gates.append(cnot(a[i], b[i]))
        gates.append(toffoli(a[i - 1], b[i - 1], a[i]))
    gates += [cnot(a[i], a[i + 1]) for i in range(1, n - 1)]
    gates += [cnot(a[i], b[i]) for i in range(n)]
    return gates


def build(spec: AdderSpec) -> Circuit:
    """Generates the gate-level circuit of ``spec``.

    Raises:
        ValueError: If the spec is invalid.
    """
    n, family = spec.n, spec.family
    a, b = _a(n), _b(n)

    if family == AdderFamily.AQA1:
        circuit = new_circuit(2 * n, {"a": a, "b": b, "sum": a})
    elif family == AdderFamily.AQA2:
        circuit = extend(new_circuit(2 * n, {"a": a, "b": b, "sum": b}), [cnot(a[i], b[i]) for i in range(n)])
    elif family == AdderFamily.AQA3:
        circuit = new_circuit(2 * n, {"a": a, "b": b, "sum": a, "cout": [b[-1]]})
    elif family == AdderFamily.AQA4:
        circuit = extend(
            new_circuit(2 * n, {"a": a, "b": b, "sum": a, "cout": [b[-1]]}),
            [cnot(b[i], a[i]) for i in range(n)],
        )
    elif family == AdderFamily.AQA5:
        cout = 2 * n
        gates = [toffoli(a[-1], b[-1], cout)] + [cnot(a[i], b[i]) for i in range(n)]
        circuit = extend(new_circuit(2 * n + 1, {"a": a, "b": b, "sum": b, "cout": [cout]}), gates)
    elif family == AdderFamily.CQA0:
        cin = 2 * n
        circuit = extend(
            new_circuit(2 * n + 1, {"a": a, "b": b, "cin": [cin], "sum": b}),
            _ripple_gates(n, cin, None),
        )
    elif family == AdderFamily.CQA1:
        cin, cout = 2 * n, 2 * n + 1
        circuit = extend(
            new_circuit(2 * n + 2, {"a": a, "b": b, "cin": [cin], "sum": b, "cout": [cout]}),
            _ripple_gates(n, cin, cout),
        )
    else:
        cout = 2 * n
        circuit = extend(
            new_circuit(2 * n + 1, {"a": a, "b": b, "sum": b, "cout": [cout]}),
            _takahashi_gates(n, cout),
        )
    logger.debug(f"[Build] {spec.label}: {circuit.num_qubits} qubits, {len(circuit.gates)} gates")
    return circuit


# --- classical semantics -----------------------------------------------------------

def eval_array(spec: AdderSpec, a, b, cin=0):
    """Design output for ints or numpy integer arrays, without range checks."""
    n, family = spec.n, spec.family
    modulus = 1 << n
    msb_a = (a >> (n - 1)) & 1
    msb_b = (b >> (n - 1)) & 1
    if family == AdderFamily.CQA0:
        return (a + b + cin) % modulus
    if family in (AdderFamily.CQA1, AdderFamily.TPL13):
        return a + b + cin
    if family == AdderFamily.AQA1:
        return a
    if family == AdderFamily.AQA2:
        return a ^ b
    if family == AdderFamily.AQA3:
        return a + modulus * msb_b
    if family == AdderFamily.AQA4:
        return (a ^ b) + modulus * msb_b
    return (a ^ b) + modulus * (msb_a & msb_b)


def _check_operands(spec: AdderSpec, a: int, b: int, cin: int):
    limit = 1 << spec.n
    if not 0 <= a < limit or not 0 <= b < limit:
        raise ValueError(f"Operands ({a}, {b}) out of range for {spec.n}-bit {spec.family.value}")
    if cin not in (0, 1):
        raise ValueError(f"Carry-in must be 0 or 1, got {cin}")
    if cin and not spec.accepts_cin:
        raise ValueError(f"{spec.family.value} has no carry-in qubit; cin must be 0")


def eval_classical(spec: AdderSpec, a: int, b: int, cin: int = 0) -> int:
    """Returns the design's output: sum + 2^n * carry for carry designs, the n-bit sum otherwise.

    Raises:
        ValueError: If operands are out of range or cin is set for a design without carry-in.
    """
    _check_operands(spec, a, b, cin)
    return int(eval_array(spec, a, b, cin))


def encode_inputs(circuit: Circuit, a: int, b: int, cin: int = 0) -> List[int]:
    """Per-qubit basis bits placing a, b and cin on their role registers."""
    bits = [0] * circuit.num_qubits
    for register, value in (("a", a), ("b", b), ("cin", cin)):
        for i, q in enumerate(circuit.role(register)):
            bits[q] = (value >> i) & 1
    return bits


def output_bits(circuit: Circuit, value: int) -> List[int]:
    """Expected bits of the measured register (sum LSB first, then cout) for ``value``."""
    return [(value >> i) & 1 for i in range(len(circuit.measured_qubits))]


def decode_output(circuit: Circuit, bits) -> int:
    return sum(bits[q] << i for i, q in enumerate(circuit.measured_qubits))


def passthrough_state(spec: AdderSpec, a: int, b: int, cin: int = 0, circuit: Optional[Circuit] = None) -> Dict[int, int]:
    """Expected final bit of every qubit outside the measured register.

    a and cin are restored by every design that computes in place; b is untouched
    when the sum lives on a; dedicated carry qubits are measured and not listed.
    """
    circuit = circuit or build(spec)
    expected = {}
    initial = encode_inputs(circuit, a, b, cin)
    measured = set(circuit.measured_qubits)
    for q in range(circuit.num_qubits):
        if q not in measured:
            expected[q] = initial[q]
    return expected


def verify_semantics(spec: AdderSpec) -> bool:
    """Checks build(spec) against eval_classical on every basis input.

    Raises:
        ValueError: If n exceeds the exhaustive-sweep limit.
    """
    if spec.n > MAX_VERIFY_BITS:
        if not build(spec).gates:
            return True
        raise ValueError(f"Exhaustive verification is limited to n <= {MAX_VERIFY_BITS}, got {spec.n}")

    circuit = build(spec)
    cins = (0, 1) if spec.accepts_cin else (0,)
    for cin in cins:
        for a in range(1 << spec.n):
            for b in range(1 << spec.n):
                final = simulate_basis(circuit, encode_inputs(circuit, a, b, cin))
                if decode_output(circuit, final) != eval_classical(spec, a, b, cin):
                    logger.warning(f"[Verify] {spec.label} wrong output for a={a}, b={b}, cin={cin}")
                    return False
                for q, bit in passthrough_state(spec, a, b, cin, circuit).items():
                    if final[q] != bit:
                        logger.warning(f"[Verify] {spec.label} qubit {q} not restored for a={a}, b={b}, cin={cin}")
                        return False
    return True


def circuit_oracle(spec: AdderSpec) -> Callable[[int, int], int]:
    """Evaluates the design by simulating its circuit instead of using eval_classical."""
    circuit = build(spec)

    def oracle(a: int, b: int) -> int:
        return decode_output(circuit, simulate_basis(circuit, encode_inputs(circuit, a, b)))

    return oracle


def depth_deviations(spec: AdderSpec) -> Dict[str, Tuple[int, int]]:
    """Columns where the generated circuit differs from the closed forms: name -> (expected, measured)."""
    row = table2_row(spec.family, spec.n)
    circuit = build(spec)
    profile = depth_profile(circuit)
    measured = {
        "qubits": circuit.num_qubits,
        "cnot_depth": profile.cnot_depth,
        "toffoli_depth": profile.toffoli_depth,
        "cnot_count": profile.cnot_count,
        "toffoli_count": profile.toffoli_count,
    }
    return {
        column: (getattr(row, column), value)
        for column, value in measured.items()
        if getattr(row, column) != value
    }
