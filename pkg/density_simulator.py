"""Exact density-matrix simulation of noisy adder circuits.

Qubit k is bit k of the computational basis index (qubit 0 is the least
significant). Three exact engines share one step list:

* dense: full 2^q x 2^q matrix; permutation and phase gates move entries,
  other channels go through Kraus sums or superoperators;
* diagonal: only the diagonal, used when every step maps diagonal states to
  diagonal states (classical gates with Pauli, damping or thermal noise);
* adjoint: pulls each outcome observable back through the steps once and
  reads it against every prepared input (fidelity sweeps without idle noise).
"""
import logging
import math
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache, reduce
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from adder_library import AdderFamily, AdderSpec, build, encode_inputs, eval_classical, output_bits
from circuit_core import (
    Circuit,
    GateKind,
    GateOp,
    decompose_toffoli,
    schedule_asap,
    with_preparation,
)
from noise_channels import (
    PAULI_X,
    KrausChannel,
    NoiseModel,
    ReadoutModel,
    ToffoliPolicy,
    default_noise_model,
    unitary_channel,
)

logger = logging.getLogger(__name__)

MAX_DENSE_QUBITS = 12
ENGINES = ("auto", "dense", "diagonal", "adjoint")
HERMITIAN_ATOL = 1e-10
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-8

Step = Tuple[KrausChannel, Tuple[int, ...]]


class ResourceLimitError(RuntimeError):
    """Raised when a simulation would exceed the dense qubit limit."""


_SQRT_HALF = 1 / math.sqrt(2)
_CNOT = np.eye(4, dtype=complex)[[0, 1, 3, 2]]
_TOFFOLI = np.eye(8, dtype=complex)[[0, 1, 2, 3, 4, 5, 7, 6]]

GATE_MATRICES: Dict[GateKind, np.ndarray] = {
    GateKind.X: PAULI_X,
    GateKind.H: np.array([[_SQRT_HALF, _SQRT_HALF], [_SQRT_HALF, -_SQRT_HALF]], dtype=complex),
    GateKind.T: np.diag([1, np.exp(1j * math.pi / 4)]),
    GateKind.TDG: np.diag([1, np.exp(-1j * math.pi / 4)]),
    GateKind.CNOT: _CNOT,
    GateKind.TOFFOLI: _TOFFOLI,
}


@lru_cache(maxsize=None)
def gate_channel(kind: GateKind) -> KrausChannel:
    return unitary_channel(GATE_MATRICES[GateKind(kind)])


class DensityMatrix:
    """A q-qubit density matrix, stored densely or as its diagonal."""

    def __init__(self, num_qubits: int, matrix: Optional[np.ndarray] = None, diagonal: Optional[np.ndarray] = None):
        if (matrix is None) == (diagonal is None):
            raise ValueError("Provide exactly one of matrix or diagonal")
        dim = 2 ** num_qubits
        if matrix is not None and matrix.shape != (dim, dim):
            raise ValueError(f"Matrix shape {matrix.shape} does not fit {num_qubits} qubits")
        if diagonal is not None and diagonal.shape != (dim,):
            raise ValueError(f"Diagonal shape {diagonal.shape} does not fit {num_qubits} qubits")
        self.num_qubits = num_qubits
        self._matrix = matrix
        self._diagonal = diagonal

    @property
    def is_diagonal(self) -> bool:
        return self._diagonal is not None

    @property
    def matrix(self) -> np.ndarray:
        if self._matrix is None:
            self._matrix = np.diag(self._diagonal).astype(complex)
        return self._matrix

    def probabilities(self) -> np.ndarray:
        if self._diagonal is not None:
            return self._diagonal
        return np.real(np.diag(self._matrix)).copy()

    def trace(self) -> float:
        return float(np.sum(self.probabilities()))

    def hermiticity_error(self) -> float:
        if self.is_diagonal:
            return 0.0
        return float(np.max(np.abs(self._matrix - self._matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        if self.is_diagonal:
            return float(np.min(self._diagonal))
        return float(np.min(np.linalg.eigvalsh(self._matrix)))

    def is_valid(self) -> bool:
        return (
            self.hermiticity_error() < HERMITIAN_ATOL
            and abs(self.trace() - 1) < TRACE_ATOL
            and self.min_eigenvalue() > -PSD_ATOL
        )

    def partial_trace(self, keep: Sequence[int]) -> np.ndarray:
        """Reduced density matrix of ``keep`` (first listed qubit most significant)."""
        q = self.num_qubits
        tensor = self.matrix.reshape((2,) * (2 * q))
        keep_axes = [_axis(q, k) for k in keep]
        rows = list(string.ascii_letters[:q])
        cols = list(string.ascii_letters[q:2 * q])
        for ax in range(q):
            if ax not in keep_axes:
                cols[ax] = rows[ax]
        out = "".join(rows[ax] for ax in keep_axes) + "".join(cols[ax] for ax in keep_axes)
        reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, tensor)
        dim = 2 ** len(keep)
        return reduced.reshape(dim, dim)


def _axis(num_qubits: int, qubit: int) -> int:
    return num_qubits - 1 - qubit


def _check_qubits(num_qubits: int, qubits: Sequence[int]):
    if any(q < 0 or q >= num_qubits for q in qubits) or len(set(qubits)) != len(qubits):
        raise ValueError(f"Invalid qubits {tuple(qubits)} for a {num_qubits}-qubit state")


def _apply_transfer(diagonal: np.ndarray, num_qubits: int, channel: KrausChannel, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    axes = [_axis(num_qubits, q) for q in qubits]
    tensor = diagonal.reshape((2,) * num_qubits)
    transfer = channel.transfer_matrix.reshape((2,) * (2 * k))
    result = np.tensordot(transfer, tensor, axes=(list(range(k, 2 * k)), axes))
    return np.moveaxis(result, list(range(k)), axes).reshape(diagonal.shape)


def _apply_superoperator(matrix: np.ndarray, num_qubits: int, superoperator: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    rows = [_axis(num_qubits, q) for q in qubits]
    cols = [num_qubits + ax for ax in rows]
    tensor = matrix.reshape((2,) * (2 * num_qubits))
    sup = superoperator.reshape((2,) * (4 * k))
    result = np.tensordot(sup, tensor, axes=(list(range(2 * k, 4 * k)), rows + cols))
    return np.moveaxis(result, list(range(2 * k)), rows + cols).reshape(matrix.shape)


def _apply_left(matrix: np.ndarray, num_qubits: int, operator: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    k = len(qubits)
    rows = [_axis(num_qubits, q) for q in qubits]
    tensor = matrix.reshape((2,) * (2 * num_qubits))
    op = operator.reshape((2,) * (2 * k))
    result = np.tensordot(op, tensor, axes=(list(range(k, 2 * k)), rows))
    return np.moveaxis(result, list(range(k)), rows).reshape(matrix.shape)


def _sandwich(matrix: np.ndarray, num_qubits: int, operator: np.ndarray, qubits: Sequence[int]) -> np.ndarray:
    """operator . matrix . operator^dagger on ``qubits``."""
    left = _apply_left(matrix, num_qubits, operator, qubits)
    return _apply_left(left.conj().T, num_qubits, operator, qubits).conj().T


def _local_index(num_qubits: int, qubits: Sequence[int]) -> np.ndarray:
    """Local basis index of every global index; qubits[0] is the most significant bit."""
    index = np.arange(2 ** num_qubits)
    local = np.zeros_like(index)
    k = len(qubits)
    for position, q in enumerate(qubits):
        local |= ((index >> q) & 1) << (k - 1 - position)
    return local


@lru_cache(maxsize=4096)
def _basis_image(num_qubits: int, channel: KrausChannel, qubits: Tuple[int, ...]) -> np.ndarray:
    """Global basis image of a permutation gate on ``qubits``."""
    k = len(qubits)
    moved = channel.permutation[_local_index(num_qubits, qubits)]
    image = np.arange(2 ** num_qubits)
    for position, q in enumerate(qubits):
        image = (image & ~(1 << q)) | (((moved >> (k - 1 - position)) & 1) << q)
    image.setflags(write=False)
    return image


@lru_cache(maxsize=4096)
def _phase_mask(num_qubits: int, channel: KrausChannel, qubits: Tuple[int, ...]) -> np.ndarray:
    phases = channel.phases[_local_index(num_qubits, qubits)]
    mask = np.outer(phases, phases.conj())
    # |phase|^2 is 1 up to rounding; keep populations exact
    np.fill_diagonal(mask, 1.0)
    mask.setflags(write=False)
    return mask


def _depolarize(matrix: np.ndarray, num_qubits: int, p: float, qubits: Sequence[int]) -> np.ndarray:
    """(1 - p) rho + p (I/d on ``qubits``) x (rho traced over ``qubits``)."""
    k = len(qubits)
    tensor = matrix.reshape((2,) * (2 * num_qubits))
    letters = string.ascii_letters[:2 * num_qubits]
    rows = [_axis(num_qubits, q) for q in qubits]
    cols = [num_qubits + ax for ax in rows]
    traced = list(letters)
    for r, c in zip(rows, cols):
        traced[c] = letters[r]
    kept = "".join(letters[ax] for ax in range(2 * num_qubits) if ax not in rows and ax not in cols)
    reduced = np.einsum("".join(traced) + "->" + kept, tensor)
    mixed = np.expand_dims(reduced, axis=tuple(sorted(rows + cols)))
    for r, c in zip(rows, cols):
        shape = [1] * (2 * num_qubits)
        shape[r] = shape[c] = 2
        mixed = mixed * np.eye(2).reshape(shape)
    return ((1 - p) * tensor + (p / 2 ** k) * mixed).reshape(matrix.shape)


def _apply_dense(matrix: np.ndarray, num_qubits: int, channel: KrausChannel, qubits: Sequence[int], adjoint: bool = False) -> np.ndarray:
    """Applies ``channel`` (or its adjoint, for observables) to a dense matrix.

    Permutation and diagonal unitaries move or rephase entries, depolarizing
    channels use the partial trace, and everything else takes whichever of the
    Kraus sum and the superoperator costs fewer multiplications per entry.
    """
    qubits = tuple(qubits)
    if channel.permutation is not None:
        image = _basis_image(num_qubits, channel, qubits)
        if adjoint:
            return matrix[np.ix_(image, image)]
        inverse = np.argsort(image)
        return matrix[np.ix_(inverse, inverse)]
    if channel.phases is not None:
        mask = _phase_mask(num_qubits, channel, qubits)
        return matrix * (mask.conj() if adjoint else mask)
    if channel.depolarizing_p is not None:
        # Pauli channels are their own adjoint
        return _depolarize(matrix, num_qubits, channel.depolarizing_p, qubits)
    if 2 * len(channel.kraus_ops) * channel.dim <= channel.dim ** 2:
        ops = [op.conj().T for op in channel.kraus_ops] if adjoint else channel.kraus_ops
        return sum(_sandwich(matrix, num_qubits, op, qubits) for op in ops)
    superoperator = channel.adjoint_superoperator if adjoint else channel.superoperator
    return _apply_superoperator(matrix, num_qubits, superoperator, qubits)


def prepare_basis(num_qubits: int, bits: Union[str, Sequence[int]]) -> DensityMatrix:
    """Projector onto a basis state; ``bits[k]`` is the value of qubit k.

    Raises:
        ValueError: If the bit count differs from ``num_qubits``.
    """
    values = [int(bit) for bit in bits]
    if len(values) != num_qubits:
        raise ValueError(f"Expected {num_qubits} bits, got {len(values)}")
    diagonal = np.zeros(2 ** num_qubits)
    diagonal[sum(bit << k for k, bit in enumerate(values))] = 1.0
    return DensityMatrix(num_qubits, diagonal=diagonal)


def apply_channel(rho: DensityMatrix, channel: KrausChannel, qubits: Sequence[int]) -> DensityMatrix:
    qubits = tuple(qubits)
    if len(qubits) != channel.arity:
        raise ValueError(f"{channel.arity}-qubit channel applied to {len(qubits)} qubit(s)")
    _check_qubits(rho.num_qubits, qubits)
    if rho.is_diagonal and channel.preserves_diagonal:
        return DensityMatrix(rho.num_qubits, diagonal=_apply_transfer(rho.probabilities(), rho.num_qubits, channel, qubits))
    return DensityMatrix(rho.num_qubits, matrix=_apply_dense(rho.matrix, rho.num_qubits, channel, qubits))


def apply_gate(rho: DensityMatrix, gate: GateOp) -> DensityMatrix:
    return apply_channel(rho, gate_channel(gate.kind), gate.qubits)


def circuit_unitary(circuit: Circuit) -> np.ndarray:
    dim = 2 ** circuit.num_qubits
    if circuit.num_qubits > MAX_DENSE_QUBITS:
        raise ResourceLimitError(f"{circuit.num_qubits} qubits exceed the dense limit of {MAX_DENSE_QUBITS}")
    unitary = np.eye(dim, dtype=complex)
    for gate in circuit.gates:
        unitary = _apply_left(unitary, circuit.num_qubits, GATE_MATRICES[gate.kind], gate.qubits)
    return unitary


def _idle_gaps(circuit: Circuit, noise_model: NoiseModel) -> Dict[Tuple[int, int], float]:
    """(gate index, qubit) -> time the qubit waits after that gate before its next one."""
    schedule = schedule_asap(circuit, noise_model.schedule_durations())
    last_gate: Dict[int, int] = {}
    gaps: Dict[Tuple[int, int], float] = {}
    for index, gate in enumerate(circuit.gates):
        for q in gate.qubits:
            if q in last_gate:
                previous = last_gate[q]
                gap = schedule.start_times[index] - schedule.end_time(previous)
                if gap > 0:
                    gaps[(previous, q)] = gap
            last_gate[q] = index
    return gaps


def _gate_steps(circuit: Circuit, noise_model: NoiseModel, num_prep: int) -> List[Step]:
    """Gates with their noise, idle channels and the readout window.

    The first ``num_prep`` gates are state preparation and only carry noise when
    the model applies it to preparation.
    """
    steps: List[Step] = []
    gaps = _idle_gaps(circuit, noise_model) if noise_model.idle_mode else {}
    for index, gate in enumerate(circuit.gates):
        steps.append((gate_channel(gate.kind), gate.qubits))
        if index >= num_prep or noise_model.apply_to_prep:
            steps.extend(noise_model.channels_for_gate(gate))
        for q in gate.qubits:
            idle = noise_model.idle_channel(gaps.get((index, q), 0.0))
            if idle is not None:
                steps.append((idle, (q,)))
    measurement = noise_model.measurement_channel()
    if measurement is not None:
        steps.extend((measurement, (q,)) for q in circuit.measured_qubits)
    return steps


def _body_circuit(circuit: Circuit, noise_model: NoiseModel) -> Circuit:
    if noise_model.toffoli_policy == ToffoliPolicy.DECOMPOSE:
        return decompose_toffoli(circuit)
    return circuit


def compile_steps(circuit: Circuit, noise_model: NoiseModel, input_bits: Sequence[int]) -> List[Step]:
    """Ordered (channel, qubits) steps of one noisy run, gates included."""
    bits = [int(bit) for bit in input_bits]
    prepared = _body_circuit(with_preparation(circuit, bits), noise_model)
    num_prep = sum(1 for bit in bits if bit)

    steps: List[Step] = []
    readout = noise_model.readout
    if readout is not None and readout.has_prep_error:
        # Flipping before the preparation X equals flipping after it
        steps.extend((readout.prep_channel(bit), (q,)) for q, bit in enumerate(bits))
    return steps + _gate_steps(prepared, noise_model, num_prep)


def run_noisy(circuit: Circuit, noise_model: NoiseModel, input_bits: Sequence[int], engine: str = "auto") -> DensityMatrix:
    """Final state of ``circuit`` run from ``input_bits`` under ``noise_model``.

    Args:
        circuit: Circuit without preparation gates.
        noise_model: Noise and policy to apply.
        input_bits: One bit per qubit, as produced by encode_inputs.
        engine: ``auto`` picks the diagonal engine whenever it is exact,
            ``dense`` and ``diagonal`` force one.

    Raises:
        ResourceLimitError: If the circuit exceeds the dense qubit limit.
        ValueError: If ``diagonal`` is forced on a run that leaves the diagonal.
    """
    if engine not in ("auto", "dense", "diagonal"):
        raise ValueError(f"Unknown engine '{engine}'")
    q = circuit.num_qubits
    if q > MAX_DENSE_QUBITS:
        raise ResourceLimitError(f"{q} qubits exceed the dense limit of {MAX_DENSE_QUBITS}")
    steps = compile_steps(circuit, noise_model, input_bits)
    diagonal_ok = all(channel.preserves_diagonal for channel, _ in steps)
    if engine == "diagonal" and not diagonal_ok:
        raise ValueError("Run leaves the diagonal; use the dense engine")

    rho = prepare_basis(q, [0] * q)
    if engine == "dense" or not diagonal_ok:
        matrix = rho.matrix
        for channel, qubits in steps:
            matrix = _apply_dense(matrix, q, channel, qubits)
        return DensityMatrix(q, matrix=matrix)

    diagonal = rho.probabilities()
    for channel, qubits in steps:
        diagonal = _apply_transfer(diagonal, q, channel, qubits)
    return DensityMatrix(q, diagonal=diagonal)


@lru_cache(maxsize=None)
def _circuit_for(spec: AdderSpec) -> Circuit:
    return build(spec)


def _decode_operands(circuit: Circuit, input_bits: Sequence[int]) -> Tuple[int, int, int]:
    values = []
    for register in ("a", "b", "cin"):
        values.append(sum(int(input_bits[q]) << i for i, q in enumerate(circuit.role(register))))
    return values[0], values[1], values[2]


def measured_marginal(rho: DensityMatrix, circuit: Circuit) -> np.ndarray:
    """Joint distribution of the measured register, one axis per bit (sum LSB first, then cout)."""
    q = rho.num_qubits
    axes = [_axis(q, m) for m in circuit.measured_qubits]
    tensor = rho.probabilities().reshape((2,) * q)
    marginal = tensor.sum(axis=tuple(ax for ax in range(q) if ax not in axes))
    ordered = sorted(axes)
    return np.transpose(marginal, [ordered.index(ax) for ax in axes])


def success_probability(rho: DensityMatrix, spec: AdderSpec, input_bits: Sequence[int], readout: Optional[ReadoutModel] = None) -> float:
    """Probability the measured register shows the design's own noiseless output."""
    circuit = _circuit_for(spec)
    a, b, cin = _decode_operands(circuit, input_bits)
    expected = output_bits(circuit, eval_classical(spec, a, b, cin))
    marginal = measured_marginal(rho, circuit)
    if readout is not None:
        probability = readout.success_probability(marginal, expected)
    else:
        probability = float(marginal[tuple(expected)])
    return min(max(probability, 0.0), 1.0)


@dataclass(frozen=True)
class FidelityReport:
    family: AdderFamily
    n: int
    noise: str
    avg_success_probability: float
    per_input: Tuple[float, ...]
    toffoli_policy: str
    idle_mode: bool
    apply_to_prep: bool


def _check_dense_limit(spec: AdderSpec) -> Circuit:
    circuit = _circuit_for(spec)
    if circuit.num_qubits > MAX_DENSE_QUBITS:
        raise ResourceLimitError(
            f"{spec.label} needs {circuit.num_qubits} qubits; dense simulation is limited to {MAX_DENSE_QUBITS}"
        )
    return circuit


def _prepared_qubit(noise_model: NoiseModel, qubit: int, bit: int) -> np.ndarray:
    """2x2 state of one qubit after its (noisy) preparation."""
    sigma = np.array([[1, 0], [0, 0]], dtype=complex)
    readout = noise_model.readout
    if readout is not None and readout.has_prep_error:
        sigma = _apply_dense(sigma, 1, readout.prep_channel(bit), (0,))
    if bit:
        sigma = _apply_dense(sigma, 1, gate_channel(GateKind.X), (0,))
        if noise_model.apply_to_prep:
            for channel, _ in noise_model.channels_for_gate(GateOp(GateKind.X, (qubit,))):
                sigma = _apply_dense(sigma, 1, channel, (0,))
    return sigma


def _outcome_weights(circuit: Circuit, outcome: Sequence[int], readout: Optional[ReadoutModel]) -> np.ndarray:
    """Diagonal of the observable 'the measured register reads ``outcome``'."""
    index = np.arange(2 ** circuit.num_qubits)
    confusion = readout.confusion() if readout is not None else np.eye(2)
    weights = np.ones(index.shape)
    for qubit, bit in zip(circuit.measured_qubits, outcome):
        weights = weights * confusion[bit][(index >> qubit) & 1]
    return weights


def _adjoint_sweep(spec: AdderSpec, circuit: Circuit, noise_model: NoiseModel, workers: Optional[int]) -> Tuple[float, ...]:
    """Success probabilities of every input from one backward pass per expected output.

    Each outcome observable is pulled back through the noisy gate steps once and
    then read against the product state every input prepares. Only valid when the
    steps do not depend on the input, i.e. without idle noise.
    """
    q = circuit.num_qubits
    steps = _gate_steps(_body_circuit(circuit, noise_model), noise_model, 0)
    size = 1 << spec.n
    groups: Dict[Tuple[int, ...], List[Tuple[int, List[int]]]] = {}
    for position, (a, b) in enumerate((a, b) for a in range(size) for b in range(size)):
        outcome = tuple(output_bits(circuit, eval_classical(spec, a, b)))
        groups.setdefault(outcome, []).append((position, encode_inputs(circuit, a, b)))
    states = {(k, bit): _prepared_qubit(noise_model, k, bit) for k in range(q) for bit in (0, 1)}

    def run_group(item):
        outcome, members = item
        observable = np.diag(_outcome_weights(circuit, outcome, noise_model.readout)).astype(complex)
        for channel, qubits in reversed(steps):
            observable = _apply_dense(observable, q, channel, qubits, adjoint=True)
        results = []
        for position, bits in members:
            rho = reduce(np.kron, [states[(k, bits[k])] for k in reversed(range(q))])
            value = float(np.real(np.sum(observable * rho.T)))
            results.append((position, min(max(value, 0.0), 1.0)))
        return results

    per_input = [0.0] * (size * size)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        for results in executor.map(run_group, groups.items()):
            for position, value in results:
                per_input[position] = value
    logger.debug(f"[Sweep] {spec.label}: {len(groups)} backward passes for {size * size} inputs")
    return tuple(per_input)


def _needs_dense(circuit: Circuit, noise_model: NoiseModel) -> bool:
    steps = _gate_steps(_body_circuit(circuit, noise_model), noise_model, 0)
    return not all(channel.preserves_diagonal for channel, _ in steps)


def fidelity_sweep(spec: AdderSpec, noise_model: NoiseModel, workers: Optional[int] = None, engine: str = "auto") -> FidelityReport:
    """Average success probability over all 4^n operand pairs with cin = 0.

    ``auto`` runs the diagonal engine when it is exact, otherwise the adjoint
    engine (one backward pass per distinct expected output), falling back to
    forward dense runs when idle noise makes the steps input dependent.

    Raises:
        ResourceLimitError: If the design exceeds the dense qubit limit.
        ValueError: On an unknown engine, or ``adjoint`` with idle noise.
    """
    if engine not in ENGINES:
        raise ValueError(f"Unknown engine '{engine}'")
    circuit = _check_dense_limit(spec)
    if engine == "auto" and not noise_model.idle_mode and _needs_dense(circuit, noise_model):
        engine = "adjoint"

    if engine == "adjoint":
        if noise_model.idle_mode:
            raise ValueError("Idle noise depends on the input; use the dense engine")
        per_input = _adjoint_sweep(spec, circuit, noise_model, workers)
    else:
        size = 1 << spec.n
        inputs = [encode_inputs(circuit, a, b) for a in range(size) for b in range(size)]

        def run_one(bits):
            rho = run_noisy(circuit, noise_model, bits, engine)
            return success_probability(rho, spec, bits, noise_model.readout)

        with ThreadPoolExecutor(max_workers=workers) as executor:
            per_input = tuple(executor.map(run_one, inputs))
    average = math.fsum(per_input) / len(per_input)
    logger.info(f"[Sweep] {spec.label} under {noise_model.label} ({noise_model.toffoli_policy.value}): {average:.4f}")
    return FidelityReport(
        family=spec.family,
        n=spec.n,
        noise=noise_model.label,
        avg_success_probability=average,
        per_input=per_input,
        toffoli_policy=noise_model.toffoli_policy.value,
        idle_mode=noise_model.idle_mode,
        apply_to_prep=noise_model.apply_to_prep,
    )


def qubit_error_profile(spec: AdderSpec, noise_model: NoiseModel, workers: Optional[int] = None) -> List[float]:
    """Average probability that each measured bit (sum LSB first, then cout) reads wrong."""
    circuit = _check_dense_limit(spec)
    size = 1 << spec.n
    inputs = [encode_inputs(circuit, a, b) for a in range(size) for b in range(size)]
    width = len(circuit.measured_qubits)

    def errors_for(bits):
        rho = run_noisy(circuit, noise_model, bits)
        a, b, cin = _decode_operands(circuit, bits)
        expected = output_bits(circuit, eval_classical(spec, a, b, cin))
        marginal = measured_marginal(rho, circuit)
        wrong = []
        for position, bit in enumerate(expected):
            others = tuple(ax for ax in range(width) if ax != position)
            wrong.append(float(marginal.sum(axis=others)[1 - bit]))
        return wrong

    with ThreadPoolExecutor(max_workers=workers) as executor:
        per_input = list(executor.map(errors_for, inputs))
    return [math.fsum(row[i] for row in per_input) / len(per_input) for i in range(width)]


def calibrate_gate_time(target: float = 0.951, t1: float = 50e-6, t2: float = 70e-6, xtol: float = 1e-12) -> float:
    """Gate time (seconds) at which AQA1 (n=4) under thermal noise reaches ``target`` fidelity.

    Raises:
        ValueError: If the target is not reachable inside [1 ns, T1].
    """
    spec = AdderSpec(AdderFamily.AQA1, 4)

    def gap(gate_time: float) -> float:
        model = default_noise_model("thermal", {"t1": t1, "t2": t2, "gate_time": gate_time})
        return fidelity_sweep(spec, model, workers=1).avg_success_probability - target

    try:
        gate_time = brentq(gap, 1e-9, t1, xtol=xtol)
    except ValueError as e:
        raise ValueError(f"Cannot reach thermal fidelity {target} with T1={t1}, T2={t2}") from e
    logger.info(f"[Calibrate] Thermal gate time {gate_time * 1e6:.4f} us gives AQA1 fidelity {target}")
    return gate_time
