"""Variable-architecture qubit-neuron network.

A candidate network is a flat phase vector plus an architecture describing
layer widths. Every activation is a unit-modulus complex state
cos(psi) + i*sin(psi). Layer transitions aggregate weighted states, subtract
an activated bias (hidden layers only), and re-rotate via a sigmoid-gated
reversal parameter: psi = (pi/2)*sigmoid(rho) - arg(U). The output qubit is
observed as sin(psi)^2, which lands in [0, 1] like the normalized targets.

Genome layout, per transition between layer widths (w_in -> w_out):
weight block of w_in*w_out phases stored source-major (W[i, j] connects
source i to destination j), then for hidden destinations a bias block and a
reversal block of w_out entries each; the output transition has no bias.
"""

from __future__ import annotations

import functools
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, GenomeFormatError

HALF_PI = np.pi / 2.0

_GENOME_MAGIC = b"QGNM"
_GENOME_VERSION = 1


@dataclass(frozen=True)
class Architecture:
    """Layer widths: input n, one or more hidden widths, single output."""

    input_width: int
    hidden_widths: tuple[int, ...]
    output_width: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if self.input_width < 1:
            raise ValueError("input_width must be >= 1")
        if not self.hidden_widths or any(w < 1 for w in self.hidden_widths):
            raise ValueError("need at least one hidden layer, all widths >= 1")
        if self.output_width != 1:
            raise ValueError("output_width is fixed at 1")

    @property
    def depth(self) -> int:
        return len(self.hidden_widths)

    @property
    def widths(self) -> tuple[int, ...]:
        """All layer widths, input first, output last."""
        return (self.input_width, *self.hidden_widths, self.output_width)


@dataclass(frozen=True)
class TransitionLayout:
    """Offsets of one transition's blocks inside the flat phase vector."""

    w_in: int
    w_out: int
    weight_start: int
    bias_start: int  # -1 when the destination layer has no bias (output)
    rev_start: int
    end: int

    @property
    def has_bias(self) -> bool:
        return self.bias_start >= 0

    @property
    def weight_slice(self) -> slice:
        return slice(self.weight_start, self.weight_start + self.w_in * self.w_out)

    @property
    def bias_slice(self) -> slice | None:
        if not self.has_bias:
            return None
        return slice(self.bias_start, self.bias_start + self.w_out)

    @property
    def rev_slice(self) -> slice:
        return slice(self.rev_start, self.rev_start + self.w_out)


@dataclass(frozen=True)
class GenomeLayout:
    transitions: tuple[TransitionLayout, ...]
    total_length: int

    def blocks(self):
        """Yield (transition_index, kind, slice) for every block, in order."""
        for t, seg in enumerate(self.transitions):
            yield t, "weight", seg.weight_slice
            if seg.has_bias:
                yield t, "bias", seg.bias_slice
            yield t, "rev", seg.rev_slice


@functools.lru_cache(maxsize=4096)
def layout(arch: Architecture) -> GenomeLayout:
    """Compute block offsets for an architecture; total equals genome length."""
    widths = arch.widths
    transitions = []
    pos = 0
    for t in range(len(widths) - 1):
        w_in, w_out = widths[t], widths[t + 1]
        weight_start = pos
        pos += w_in * w_out
        is_output = t == len(widths) - 2
        bias_start = -1
        if not is_output:
            bias_start = pos
            pos += w_out
        rev_start = pos
        pos += w_out
        transitions.append(
            TransitionLayout(w_in, w_out, weight_start, bias_start, rev_start, pos)
        )
    return GenomeLayout(transitions=tuple(transitions), total_length=pos)


@dataclass(frozen=True, eq=False)
class NetworkGenome:
    """Immutable candidate network: architecture plus flat phase vector."""

    architecture: Architecture
    phases: np.ndarray

    def __post_init__(self):
        phases = np.ascontiguousarray(self.phases, dtype=float)
        expected = layout(self.architecture).total_length
        if phases.shape != (expected,):
            raise ValueError(
                f"genome length {phases.shape} does not match layout ({expected},)"
            )
        if not np.isfinite(phases).all():
            raise ValueError("genome phases must be finite")
        phases.setflags(write=False)
        object.__setattr__(self, "phases", phases)

    def __eq__(self, other) -> bool:
        if not isinstance(other, NetworkGenome):
            return NotImplemented
        return self.architecture == other.architecture and np.array_equal(
            self.phases, other.phases
        )

    def weight_matrix(self, t: int) -> np.ndarray:
        seg = layout(self.architecture).transitions[t]
        return self.phases[seg.weight_slice].reshape(seg.w_in, seg.w_out)

    def bias_vector(self, t: int) -> np.ndarray | None:
        seg = layout(self.architecture).transitions[t]
        return None if not seg.has_bias else self.phases[seg.bias_slice]

    def reversal_vector(self, t: int) -> np.ndarray:
        seg = layout(self.architecture).transitions[t]
        return self.phases[seg.rev_slice]


def random_genome(arch: Architecture, rng: np.random.Generator) -> NetworkGenome:
    """Sample a genome: weights/biases uniform in [-pi/2, pi/2], reversals in [-1, 1]."""
    lay = layout(arch)
    phases = np.empty(lay.total_length)
    for _, kind, sl in lay.blocks():
        lo, hi = (-1.0, 1.0) if kind == "rev" else (-HALF_PI, HALF_PI)
        phases[sl] = rng.uniform(lo, hi, sl.stop - sl.start)
    return NetworkGenome(architecture=arch, phases=phases)


@dataclass
class ForwardDiagnostics:
    """Counters accumulated during forward passes."""

    degenerate_args: int = 0


def encode_input(normalized):
    """Map normalized values in [0, 1] to phases in [0, pi/2]."""
    return HALF_PI * np.asarray(normalized, dtype=float)


def activate(phase):
    """Unit-modulus qubit state cos(phase) + i*sin(phase)."""
    return np.exp(1j * np.asarray(phase, dtype=float))


def sigmoid(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 / (1.0 + np.exp(-x))


def neuron_aggregate(incoming, weight_phases, bias_phase=None):
    """Accumulate one neuron's input: sum(activate(w_i) * y_i) - activate(bias).

    `incoming` are qubit states (complex), `weight_phases` the matching
    connection phases. The result is intentionally unnormalized.
    """
    states = np.asarray(incoming, dtype=complex)
    weights = np.asarray(weight_phases, dtype=float)
    if states.shape != weights.shape:
        raise DimensionMismatchError(
            f"{states.shape} incoming states vs {weights.shape} weight phases"
        )
    if states.size == 0:
        raise DimensionMismatchError("neuron with no incoming connections")
    total = np.sum(activate(weights) * states)
    if bias_phase is not None:
        total = total - activate(bias_phase)
    return total


def reverse_rotate(u, reversal, diag: ForwardDiagnostics | None = None):
    """Sigmoid-gated reverse rotation: (pi/2)*sigmoid(rho) - arg(u).

    A zero accumulation has no argument; it is treated as arg 0 and counted
    in `diag` so training can report how often it happened.
    """
    u = np.asarray(u, dtype=complex)
    if diag is not None:
        diag.degenerate_args += int(np.count_nonzero((u.real == 0.0) & (u.imag == 0.0)))
    psi = HALF_PI * sigmoid(reversal) - np.angle(u)
    return float(psi) if psi.ndim == 0 else psi


def qubit_vector_magnitude(states) -> float:
    """Diagnostic norm sqrt(sum(re^2 + im^2)) over a non-empty state list."""
    z = np.asarray(states, dtype=complex)
    if z.size == 0:
        raise ValueError("magnitude of an empty state list is undefined")
    return float(np.sqrt(np.sum(z.real**2 + z.imag**2)))


def input_states(rows: np.ndarray) -> np.ndarray:
    """Encode and activate a matrix of normalized rows (genome-independent)."""
    rows = np.asarray(rows, dtype=float)
    if rows.ndim != 2:
        raise DimensionMismatchError(f"expected 2-d input matrix, got shape {rows.shape}")
    return activate(encode_input(rows))


def forward_states(
    genome: NetworkGenome,
    states: np.ndarray,
    diag: ForwardDiagnostics | None = None,
) -> np.ndarray:
    """Run the network over pre-activated input states; one prediction per row."""
    arch = genome.architecture
    if states.shape[1] != arch.input_width:
        raise DimensionMismatchError(
            f"row width {states.shape[1]} != network input width {arch.input_width}"
        )
    transitions = layout(arch).transitions
    y = states
    psi = None
    for t, seg in enumerate(transitions):
        w = activate(genome.phases[seg.weight_slice]).reshape(seg.w_in, seg.w_out)
        u = y @ w
        if seg.has_bias:
            u = u - activate(genome.phases[seg.bias_slice])[None, :]
        if diag is not None:
            diag.degenerate_args += int(
                np.count_nonzero((u.real == 0.0) & (u.imag == 0.0))
            )
        psi = HALF_PI * sigmoid(genome.phases[seg.rev_slice])[None, :] - np.angle(u)
        if t < len(transitions) - 1:
            y = activate(psi)
    return np.square(np.sin(psi[:, 0]))


def forward_batch(
    genome: NetworkGenome,
    rows: np.ndarray,
    diag: ForwardDiagnostics | None = None,
) -> np.ndarray:
    """Predict one normalized value in [0, 1] per input row."""
    return forward_states(genome, input_states(rows), diag)


def forward(
    genome: NetworkGenome,
    normalized_row,
    diag: ForwardDiagnostics | None = None,
) -> float:
    """Predict for a single normalized window."""
    row = np.asarray(normalized_row, dtype=float)
    if row.ndim != 1:
        raise DimensionMismatchError(f"expected 1-d row, got shape {row.shape}")
    return float(forward_batch(genome, row[None, :], diag)[0])


def genome_to_bytes(genome: NetworkGenome) -> bytes:
    """Serialize: magic, version, widths header, then the raw phase array."""
    arch = genome.architecture
    header = struct.pack(
        f"<4sIIII{arch.depth}IQ",
        _GENOME_MAGIC,
        _GENOME_VERSION,
        arch.input_width,
        arch.depth,
        arch.output_width,
        *arch.hidden_widths,
        genome.phases.size,
    )
    return header + genome.phases.astype("<f8").tobytes()


def genome_from_bytes(blob: bytes) -> NetworkGenome:
    try:
        magic, version, n, depth, q = struct.unpack_from("<4sIIII", blob, 0)
        if magic != _GENOME_MAGIC:
            raise GenomeFormatError("bad genome magic")
        if version != _GENOME_VERSION:
            raise GenomeFormatError(f"unsupported genome version {version}")
        offset = struct.calcsize("<4sIIII")
        widths = struct.unpack_from(f"<{depth}I", blob, offset)
        offset += struct.calcsize(f"<{depth}I")
        (length,) = struct.unpack_from("<Q", blob, offset)
        offset += struct.calcsize("<Q")
        phases = np.frombuffer(blob, dtype="<f8", count=length, offset=offset)
        if offset + 8 * length != len(blob):
            raise GenomeFormatError("trailing bytes after phase array")
    except struct.error as exc:
        raise GenomeFormatError(f"truncated genome data: {exc}")
    arch = Architecture(input_width=n, hidden_widths=widths, output_width=q)
    return NetworkGenome(architecture=arch, phases=phases.copy())


def save_genome(genome: NetworkGenome, path: str | Path) -> None:
    Path(path).write_bytes(genome_to_bytes(genome))


def load_genome(path: str | Path) -> NetworkGenome:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"genome file not found: {path}")
    return genome_from_bytes(path.read_bytes())
