"""Kraus channels, readout errors and the policy binding them to circuit gates.

Matrices use the big-endian convention inside an operator: for a channel acting on
qubits (q0, q1), q0 is the most significant factor of the Kronecker product.
"""
import itertools
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property, lru_cache, reduce
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from circuit_core import GateKind, GateOp, extend, new_circuit, schedule_asap, toffoli_network

logger = logging.getLogger(__name__)

COMPLETENESS_ATOL = 1e-12

I2 = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, PAULI_X, PAULI_Y, PAULI_Z)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    arity: int
    kraus_ops: Tuple[np.ndarray, ...]
    # Set by depolarizing(); lets the simulator use the partial-trace form
    depolarizing_p: Optional[float] = None

    def __post_init__(self):
        dim = 2 ** self.arity
        ops = tuple(np.asarray(op, dtype=complex) for op in self.kraus_ops)
        if not ops:
            raise ValueError("A channel needs at least one Kraus operator")
        for op in ops:
            if op.shape != (dim, dim):
                raise ValueError(f"Kraus operator of shape {op.shape} on {self.arity} qubit(s)")
            op.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def dim(self) -> int:
        return 2 ** self.arity

    def completeness_error(self) -> float:
        total = sum(op.conj().T @ op for op in self.kraus_ops)
        return float(np.max(np.abs(total - np.eye(self.dim))))

    def is_cptp(self, atol: float = COMPLETENESS_ATOL) -> bool:
        return self.completeness_error() <= atol

    @cached_property
    def transfer_matrix(self) -> np.ndarray:
        """Action on diagonal states: T[i, j] = sum_K |K[i, j]|^2, columns normalised to 1."""
        transfer = sum(np.abs(op) ** 2 for op in self.kraus_ops)
        transfer = transfer / transfer.sum(axis=0, keepdims=True)
        transfer.setflags(write=False)
        return transfer

    @cached_property
    def superoperator(self) -> np.ndarray:
        """S[i, j, k, l] such that rho'[i, j] = sum_kl S[i, j, k, l] rho[k, l]."""
        d = self.dim
        sup = sum(np.einsum("ik,jl->ijkl", op, op.conj()) for op in self.kraus_ops)
        idx = np.arange(d)
        # Pin the diagonal-to-diagonal block so diagonal fixed points stay exact
        sup[idx[:, None], idx[:, None], idx[None, :], idx[None, :]] = self.transfer_matrix
        sup.setflags(write=False)
        return sup

    @cached_property
    def adjoint_superoperator(self) -> np.ndarray:
        """A[a, b, c, d] = S[d, c, b, a]: the same contraction maps observables backwards."""
        adjoint = np.ascontiguousarray(self.superoperator.transpose(3, 2, 1, 0))
        adjoint.setflags(write=False)
        return adjoint

    @cached_property
    def permutation(self) -> Optional[np.ndarray]:
        """Basis image of a permutation unitary (U|j> = |image[j]>), else None."""
        if len(self.kraus_ops) != 1:
            return None
        op = self.kraus_ops[0]
        if not np.all((op == 0) | (op == 1)) or not np.all(op.sum(axis=0) == 1):
            return None
        image = np.argmax(op.real, axis=0)
        image.setflags(write=False)
        return image

    @cached_property
    def phases(self) -> Optional[np.ndarray]:
        """Diagonal of a diagonal unitary, else None."""
        if len(self.kraus_ops) != 1:
            return None
        op = self.kraus_ops[0]
        if np.any(op[~np.eye(self.dim, dtype=bool)] != 0):
            return None
        return np.diag(op).copy()

    @cached_property
    def preserves_diagonal(self) -> bool:
        """True when every computational basis state is mapped to a diagonal state."""
        d = self.dim
        off_diagonal = ~np.eye(d, dtype=bool)
        for k in range(d):
            image = self.superoperator[:, :, k, k]
            if np.any(np.abs(image[off_diagonal]) > 1e-15):
                return False
        return True


def _check_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0 or math.isnan(value):
        raise ValueError(f"{name} must lie in [0, 1], got {value}")


def _kron_all(ops: Sequence[np.ndarray]) -> np.ndarray:
    return reduce(np.kron, ops)


@lru_cache(maxsize=None)
def identity_channel(arity: int = 1) -> KrausChannel:
    return KrausChannel(arity, (np.eye(2 ** arity, dtype=complex),))


def unitary_channel(matrix: np.ndarray) -> KrausChannel:
    arity = int(round(math.log2(matrix.shape[0])))
    return KrausChannel(arity, (np.asarray(matrix, dtype=complex),))


@lru_cache(maxsize=None)
def depolarizing(p: float, arity: int = 1) -> KrausChannel:
    """Replaces the touched qubits by the maximally mixed state with probability p.

    Each of the 4^arity - 1 non-identity Paulis carries weight p / 4^arity.
    """
    _check_probability("Depolarizing probability", p)
    if arity not in (1, 2):
        raise ValueError(f"Depolarizing channel supports 1 or 2 qubits, got {arity}")
    if p == 0:
        return identity_channel(arity)
    terms = 4 ** arity
    ops = []
    for index, paulis in enumerate(itertools.product(PAULIS, repeat=arity)):
        weight = 1 - p * (terms - 1) / terms if index == 0 else p / terms
        if weight > 0:
            ops.append(math.sqrt(weight) * _kron_all(paulis))
    return KrausChannel(arity, tuple(ops), depolarizing_p=p)


@lru_cache(maxsize=None)
def amplitude_damping(gamma: float) -> KrausChannel:
    _check_probability("Damping parameter", gamma)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - gamma)]], dtype=complex)
    k1 = np.array([[0, math.sqrt(gamma)], [0, 0]], dtype=complex)
    return KrausChannel(1, (k0, k1))


@lru_cache(maxsize=None)
def phase_damping(lam: float) -> KrausChannel:
    """Scales coherences by sqrt(1 - lam); populations are untouched."""
    _check_probability("Dephasing parameter", lam)
    k0 = np.array([[1, 0], [0, math.sqrt(1 - lam)]], dtype=complex)
    k1 = np.array([[0, 0], [0, math.sqrt(lam)]], dtype=complex)
    return KrausChannel(1, (k0, k1))


@lru_cache(maxsize=None)
def bitflip(p: float, arity: int = 1, joint: bool = False) -> KrausChannel:
    """X with probability p. For arity 2, ``joint`` flips both qubits together;
    otherwise each qubit flips independently."""
    _check_probability("Bitflip probability", p)
    if arity == 1:
        return KrausChannel(1, (math.sqrt(1 - p) * I2, math.sqrt(p) * PAULI_X))
    if arity != 2:
        raise ValueError(f"Bitflip channel supports 1 or 2 qubits, got {arity}")
    if joint:
        return KrausChannel(2, (math.sqrt(1 - p) * np.eye(4), math.sqrt(p) * np.kron(PAULI_X, PAULI_X)))
    single = bitflip(p)
    return KrausChannel(2, tuple(np.kron(k0, k1) for k0 in single.kraus_ops for k1 in single.kraus_ops))


def compose(first: KrausChannel, second: KrausChannel) -> KrausChannel:
    """Channel applying ``first`` then ``second``."""
    if first.arity != second.arity:
        raise ValueError(f"Cannot compose {first.arity}- and {second.arity}-qubit channels")
    return KrausChannel(first.arity, tuple(k2 @ k1 for k1 in first.kraus_ops for k2 in second.kraus_ops))


@lru_cache(maxsize=None)
def thermal(t1: float, t2: float, duration: float) -> KrausChannel:
    """Thermal relaxation over ``duration`` seconds: amplitude damping then pure dephasing.

    Raises:
        ValueError: If t2 > 2*t1, a time is not positive, or duration is negative.
    """
    if t1 <= 0 or t2 <= 0:
        raise ValueError(f"T1 and T2 must be positive, got T1={t1}, T2={t2}")
    if t2 > 2 * t1:
        raise ValueError(f"Unphysical relaxation times: T2={t2} exceeds 2*T1={2 * t1}")
    if duration < 0:
        raise ValueError(f"Duration must be non-negative, got {duration}")
    gamma = 1 - math.exp(-duration / t1)
    dephasing_rate = 1 / t2 - 1 / (2 * t1)
    lam = 1 - math.exp(-2 * duration * dephasing_rate)
    return compose(amplitude_damping(gamma), phase_damping(min(max(lam, 0.0), 1.0)))


@dataclass(frozen=True)
class ReadoutModel:
    """Classical measurement confusion plus faulty preparation.

    ``p_prep_error_0`` is the chance a qubit meant to start in 0 starts in 1;
    ``p_prep_error_1`` the chance a qubit meant to start in 1 starts in 0.
    """
    p_meas_1_given_0: float = 0.0
    p_meas_0_given_1: float = 0.0
    p_prep_error_0: float = 0.0
    p_prep_error_1: float = 0.0

    def __post_init__(self):
        for name in ("p_meas_1_given_0", "p_meas_0_given_1", "p_prep_error_0", "p_prep_error_1"):
            _check_probability(name, getattr(self, name))

    def confusion(self) -> np.ndarray:
        """C[measured, actual]."""
        return np.array([
            [1 - self.p_meas_1_given_0, self.p_meas_0_given_1],
            [self.p_meas_1_given_0, 1 - self.p_meas_0_given_1],
        ])

    def prep_channel(self, intended_bit: int) -> KrausChannel:
        return bitflip(self.p_prep_error_1 if intended_bit else self.p_prep_error_0)

    @property
    def has_prep_error(self) -> bool:
        return self.p_prep_error_0 > 0 or self.p_prep_error_1 > 0

    def success_probability(self, marginal: np.ndarray, expected_bits: Sequence[int]) -> float:
        """Probability of reading ``expected_bits`` given the true joint distribution.

        ``marginal`` has one axis of length 2 per measured bit, in the order of
        ``expected_bits``.
        """
        confusion = self.confusion()
        result = marginal
        for bit in expected_bits:
            result = np.tensordot(confusion[bit], result, axes=([0], [0]))
        return float(result)


def readout_spam_model(params: Mapping[str, float]) -> ReadoutModel:
    """Builds a ReadoutModel from a parameter mapping; missing keys default to 0."""
    known = set(ReadoutModel.__dataclass_fields__)
    unknown = set(params) - known
    if unknown:
        raise ValueError(f"Unknown readout parameters {sorted(unknown)}")
    return ReadoutModel(**{key: float(value) for key, value in params.items()})


class NoiseKind(str, Enum):
    THERMAL = "thermal"
    DEPOLARIZING = "depolarizing"
    AMPLITUDE_DAMPING = "amplitude_damping"
    PHASE_DAMPING = "phase_damping"
    BITFLIP = "bitflip"
    NONE = "none"


class ToffoliPolicy(str, Enum):
    NATIVE = "native"
    DECOMPOSE = "decompose"


# Benchmark defaults
DEFAULT_T1 = 50e-6
DEFAULT_T2 = 70e-6
# Shared time of every gate when ``gate_time`` is given; calibrate_gate_time solves it
DEFAULT_GATE_TIME = 1.264e-6
# Per-kind thermal durations (s) of the usual transmon tutorial model: u1-type phase
# gates are instant, u2 = 50 ns, u3 = 100 ns, cx = 300 ns, measurement 1 us
THERMAL_DURATIONS: Dict[GateKind, float] = {
    GateKind.X: 100e-9,
    GateKind.H: 50e-9,
    GateKind.T: 0.0,
    GateKind.TDG: 0.0,
    GateKind.CNOT: 300e-9,
}
DEFAULT_MEASURE_TIME = 1e-6


def toffoli_duration(durations: Mapping[GateKind, float]) -> float:
    """A native Toffoli lasts as long as its Clifford+T network under ``durations``."""
    network = extend(new_circuit(3, {"sum": [2]}), toffoli_network(0, 1, 2))
    return schedule_asap(network, durations).makespan


def thermal_durations(overrides: Optional[Mapping] = None) -> Dict[GateKind, float]:
    durations = {**THERMAL_DURATIONS, **{GateKind(k): float(v) for k, v in (overrides or {}).items()}}
    if GateKind.TOFFOLI not in durations:
        durations[GateKind.TOFFOLI] = toffoli_duration(durations)
    return durations


PRESET_DEFAULTS: Dict[str, Dict] = {
    "thermal": {
        "kind": NoiseKind.THERMAL,
        "t1": DEFAULT_T1,
        "t2": DEFAULT_T2,
        "durations": {},
        "measure_time": DEFAULT_MEASURE_TIME,
    },
    "depolarizing": {"kind": NoiseKind.DEPOLARIZING, "one_qubit": 0.005, "two_qubit": 0.01},
    "phase": {"kind": NoiseKind.PHASE_DAMPING, "one_qubit": 0.01},
    "amplitude": {"kind": NoiseKind.AMPLITUDE_DAMPING, "one_qubit": 0.01},
    "bitflip": {"kind": NoiseKind.BITFLIP, "one_qubit": 0.01, "two_qubit": 0.01},
    "none": {"kind": NoiseKind.NONE},
    "spam": {
        "kind": NoiseKind.NONE,
        "readout": {"p_meas_1_given_0": 0.1, "p_meas_0_given_1": 0.1, "p_prep_error_0": 0.02, "p_prep_error_1": 0.04},
    },
    "readout": {"kind": NoiseKind.NONE, "readout": {"p_meas_1_given_0": 0.05, "p_meas_0_given_1": 0.1}},
}

PRESET_ALIASES = {"phase_damping": "phase", "amplitude_damping": "amplitude"}

# Order of the published tables
BENCHMARK_PRESETS = ("thermal", "depolarizing", "phase", "amplitude", "bitflip")


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind = NoiseKind.NONE
    label: str = "none"
    one_qubit: float = 0.0
    two_qubit: float = 0.0
    t1: float = DEFAULT_T1
    t2: float = DEFAULT_T2
    durations: Dict[GateKind, float] = field(default_factory=dict)
    apply_to_prep: bool = True
    toffoli_policy: ToffoliPolicy = ToffoliPolicy.NATIVE
    idle_mode: bool = False
    bitflip_joint: bool = False
    readout: Optional[ReadoutModel] = None
    measure_time: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NoiseKind(self.kind))
        object.__setattr__(self, "toffoli_policy", ToffoliPolicy(self.toffoli_policy))
        _check_probability(f"{self.label} one-qubit parameter", self.one_qubit)
        _check_probability(f"{self.label} two-qubit parameter", self.two_qubit)
        durations = {GateKind(kind): float(value) for kind, value in self.durations.items()}
        if self.kind == NoiseKind.THERMAL:
            if any(value < 0 for value in durations.values()) or self.measure_time < 0:
                raise ValueError(f"Thermal durations must not be negative: {durations}, measure {self.measure_time}")
            thermal(self.t1, self.t2, 0.0)  # validates T1/T2
        object.__setattr__(self, "durations", durations)

    def gate_duration(self, kind: GateKind) -> float:
        """Seconds for thermal models, one tick otherwise."""
        if self.kind == NoiseKind.THERMAL:
            return self.durations.get(GateKind(kind), DEFAULT_GATE_TIME)
        return 1.0

    def schedule_durations(self) -> Dict[GateKind, float]:
        return {kind: self.gate_duration(kind) for kind in GateKind}

    def _one_qubit_channel(self) -> Optional[KrausChannel]:
        if self.kind == NoiseKind.DEPOLARIZING:
            return depolarizing(self.one_qubit, 1)
        if self.kind == NoiseKind.AMPLITUDE_DAMPING:
            return amplitude_damping(self.one_qubit)
        if self.kind == NoiseKind.PHASE_DAMPING:
            return phase_damping(self.one_qubit)
        if self.kind == NoiseKind.BITFLIP:
            return bitflip(self.one_qubit)
        return None

    def _pair_channels(self, pair: Tuple[int, int]) -> List[Tuple[KrausChannel, Tuple[int, ...]]]:
        if self.kind == NoiseKind.DEPOLARIZING:
            return [(depolarizing(self.two_qubit, 2), pair)]
        if self.kind == NoiseKind.BITFLIP:
            if self.bitflip_joint:
                return [(bitflip(self.two_qubit, 2, joint=True), pair)]
            return [(bitflip(self.two_qubit), (q,)) for q in pair]
        # Amplitude and phase damping act on 1-qubit gates only
        return []

    def channels_for_gate(self, gate: GateOp) -> List[Tuple[KrausChannel, Tuple[int, ...]]]:
        """Channels (with the qubits they act on) applied right after ``gate``."""
        if self.kind == NoiseKind.NONE:
            return []
        if self.kind == NoiseKind.THERMAL:
            channel = thermal(self.t1, self.t2, self.gate_duration(gate.kind))
            return [(channel, (q,)) for q in gate.qubits]
        if len(gate.qubits) == 1:
            channel = self._one_qubit_channel()
            return [(channel, gate.qubits)] if channel is not None else []
        if gate.kind == GateKind.CNOT:
            return self._pair_channels(gate.qubits)
        if gate.kind == GateKind.TOFFOLI:
            c1, c2, target = gate.qubits
            return self._pair_channels((c1, target)) + self._pair_channels((c2, target))
        raise ValueError(f"No noise rule for {gate.kind.name}")

    def idle_channel(self, duration: float) -> Optional[KrausChannel]:
        """Channel for a qubit idling ``duration`` (seconds for thermal, ticks otherwise)."""
        if not self.idle_mode or duration <= 0:
            return None
        if self.kind == NoiseKind.THERMAL:
            return thermal(self.t1, self.t2, duration)
        if self.kind == NoiseKind.AMPLITUDE_DAMPING:
            return amplitude_damping(1 - (1 - self.one_qubit) ** duration)
        return None

    def measurement_channel(self) -> Optional[KrausChannel]:
        """Relaxation of a measured qubit during readout; thermal models only."""
        if self.kind != NoiseKind.THERMAL or self.measure_time <= 0:
            return None
        return thermal(self.t1, self.t2, self.measure_time)


def resolve_preset(label: str) -> str:
    key = PRESET_ALIASES.get(str(label).lower(), str(label).lower())
    if key not in PRESET_DEFAULTS:
        valid = ", ".join(sorted(PRESET_DEFAULTS))
        raise ValueError(f"Unknown noise preset '{label}' (expected one of {valid})")
    return key


def default_noise_model(label: str, params: Optional[Mapping] = None, **policy) -> NoiseModel:
    """Builds a NoiseModel from a preset label, parameter overrides and policy flags.

    Args:
        label: Preset name such as ``depolarizing`` or ``thermal``.
        params: Overrides for the preset's parameters (``one_qubit``, ``two_qubit``,
            ``t1``, ``t2``, ``gate_time``, ``durations``, ``measure_time``,
            ``readout``). Thermal ``durations`` merge into the per-kind defaults;
            ``gate_time`` switches to one shared time for every gate kind.
        **policy: NoiseModel policy fields (``apply_to_prep``, ``toffoli_policy``,
            ``idle_mode``, ``bitflip_joint``).

    Raises:
        ValueError: On unknown presets, parameters or out-of-range values.
    """
    key = resolve_preset(label)
    merged = dict(PRESET_DEFAULTS[key])
    for name, value in (params or {}).items():
        if name == "readout":
            merged["readout"] = {**merged.get("readout", {}), **value}
        else:
            merged[name] = value

    kind = NoiseKind(merged.pop("kind"))
    readout = merged.pop("readout", None)
    gate_time = merged.pop("gate_time", None)
    durations = {GateKind(k): float(v) for k, v in merged.pop("durations", {}).items()}
    if kind == NoiseKind.THERMAL:
        if gate_time is not None:
            # Shared-time model: every kind takes gate_time, no readout window unless given
            durations = {**{k: float(gate_time) for k in GateKind}, **durations}
            if "measure_time" not in (params or {}):
                merged["measure_time"] = 0.0
        else:
            durations = thermal_durations(durations)

    allowed = {"one_qubit", "two_qubit", "t1", "t2", "measure_time"}
    unknown = set(merged) - allowed
    if unknown:
        raise ValueError(f"Unknown parameters {sorted(unknown)} for noise preset '{key}'")

    return NoiseModel(
        kind=kind,
        label=key,
        durations=durations,
        readout=readout_spam_model(readout) if readout else None,
        **{name: float(value) for name, value in merged.items()},
        **policy,
    )
