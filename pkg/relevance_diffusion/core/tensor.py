#!/usr/bin/env python3
"""
Dense numerical core: flat parameter vectors, seeded random streams and
a finite-difference gradient checker
"""

from dataclasses import dataclass, field

import numpy as np


# Purpose-specific stream ids, so that e.g. changing the sampling seed never
# perturbs the initial weights.
STREAM_INIT = 1
STREAM_TRAIN = 2
STREAM_DATA = 3
STREAM_SAMPLE = 4
STREAM_EVAL = 5
STREAM_GRADCHECK = 6

_UINT64_LIMIT = 2 ** 64


class ParamVector:
    """Read-only flat vector of 64-bit parameters with a named block layout"""

    def __init__(self, values, layout):
        """
        Initialize the vector

        Args:
            values: 1-D array of parameter values
            layout: Sequence of (name, shape) entries mapping consecutive
                slices of `values` to weight/bias blocks

        Raises:
            ValueError: On empty/zero-size layouts, length mismatch or
                non-finite values
        """
        self.layout = _validate_layout(layout)
        values = np.array(values, dtype=np.float64).ravel()

        expected = sum(int(np.prod(shape)) for _, shape in self.layout)
        if values.size != expected:
            raise ValueError(f"Parameter vector has {values.size} values, layout needs {expected}")
        if not np.all(np.isfinite(values)):
            bad = self._first_bad_block(values)
            raise ValueError(f"Non-finite parameter values in block '{bad}'")

        values.flags.writeable = False
        self.values = values

        self._slices = {}
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape))
            self._slices[name] = (slice(offset, offset + size), shape)
            offset += size

    def _first_bad_block(self, values):
        offset = 0
        for name, shape in self.layout:
            size = int(np.prod(shape))
            if not np.all(np.isfinite(values[offset:offset + size])):
                return name
            offset += size
        return None

    @property
    def size(self):
        return self.values.size

    @property
    def names(self):
        return [name for name, _ in self.layout]

    def block(self, name):
        """Return a read-only view of one block in its declared shape"""
        if name not in self._slices:
            raise KeyError(f"Unknown parameter block '{name}'")
        sl, shape = self._slices[name]
        return self.values[sl].reshape(shape)

    def block_slice(self, name):
        return self._slices[name][0]

    def blocks(self):
        return {name: self.block(name) for name in self.names}

    def replace(self, values):
        """Return a new vector with the same layout and different values"""
        return ParamVector(values, self.layout)

    def flatten(self, blocks):
        """Pack a {name: array} mapping into a flat array following this layout"""
        parts = []
        for name, shape in self.layout:
            part = np.asarray(blocks[name], dtype=np.float64)
            if part.shape != tuple(shape):
                raise ValueError(f"Block '{name}' has shape {part.shape}, expected {tuple(shape)}")
            parts.append(part.ravel())
        return np.concatenate(parts)

    def to_dict(self):
        """Serialize as {block name: flat list of floats}"""
        return {name: [float(v) for v in self.block(name).ravel()] for name in self.names}

    @classmethod
    def from_dict(cls, layout, data):
        layout = _validate_layout(layout)
        missing = [name for name, _ in layout if name not in data]
        if missing:
            raise ValueError(f"Missing parameter blocks: {', '.join(missing)}")
        values = np.concatenate([np.asarray(data[name], dtype=np.float64).ravel() for name, _ in layout])
        return cls(values, layout)

    @classmethod
    def stack(cls, named):
        """
        Concatenate several vectors into one, prefixing block names

        Args:
            named: Ordered mapping {prefix: ParamVector}

        Returns:
            ParamVector whose blocks are named '<prefix>/<block>'
        """
        layout = []
        values = []
        for prefix, vector in named.items():
            layout.extend((f"{prefix}/{name}", shape) for name, shape in vector.layout)
            values.append(vector.values)
        return cls(np.concatenate(values), layout)

    def split(self, templates):
        """Inverse of `stack`: cut this vector back into {prefix: ParamVector}"""
        out = {}
        for prefix, template in templates.items():
            parts = [self.block(f"{prefix}/{name}").ravel() for name in template.names]
            out[prefix] = ParamVector(np.concatenate(parts), template.layout)
        return out

    def __eq__(self, other):
        return (isinstance(other, ParamVector)
                and self.layout == other.layout
                and np.array_equal(self.values, other.values))

    def __repr__(self):
        return f"ParamVector(size={self.size}, blocks={self.names})"


def _validate_layout(layout):
    layout = tuple((str(name), tuple(int(n) for n in shape)) for name, shape in layout)
    if not layout:
        raise ValueError("Parameter layout must contain at least one block")
    seen = set()
    for name, shape in layout:
        if name in seen:
            raise ValueError(f"Duplicate parameter block '{name}'")
        seen.add(name)
        if len(shape) == 0 or int(np.prod(shape)) == 0:
            raise ValueError(f"Parameter block '{name}' has zero size")
    return layout


class RngStream:
    """
    Counter-based random stream keyed by (seed, stream_id)

    Draws come from a Philox generator whose key is the pair, so the
    sequence depends only on the key and the number of values already drawn.
    """

    def __init__(self, seed, stream_id=0):
        seed = int(seed)
        stream_id = int(stream_id)
        if not (0 <= seed < _UINT64_LIMIT) or not (0 <= stream_id < _UINT64_LIMIT):
            raise ValueError("seed and stream_id must be unsigned 64-bit integers")
        self.seed = seed
        self.stream_id = stream_id
        self.counter = 0
        key = np.array([seed, stream_id], dtype=np.uint64)
        self._generator = np.random.Generator(np.random.Philox(key=key))

    def derive(self, index):
        """Child stream for `index`; independent of how much this stream has drawn"""
        state = np.random.SeedSequence([self.seed, self.stream_id, int(index)]).generate_state(1, np.uint64)
        return RngStream(self.seed, int(state[0]))

    def normal(self, shape):
        out = self._generator.standard_normal(shape)
        self.counter += out.size
        return out

    def uniform(self, low, high, shape):
        out = self._generator.uniform(low, high, shape)
        self.counter += out.size
        return out

    def integers(self, low, high, shape):
        """Integers in [low, high)"""
        out = self._generator.integers(low, high, shape)
        self.counter += out.size
        return out

    def choice(self, n, size, replace=False):
        out = self._generator.choice(n, size=size, replace=replace)
        self.counter += np.size(out)
        return out

    def __repr__(self):
        return f"RngStream(seed={self.seed}, stream_id={self.stream_id}, counter={self.counter})"


def rng_normal(stream, n):
    """Draw `n` i.i.d. standard-normal values from `stream`"""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return stream.normal(int(n))


def init_params(stream, layout):
    """
    Initialize parameters: Glorot-uniform weights, zero biases

    Blocks with two dimensions are weights of shape (fan_in, fan_out);
    one-dimensional blocks are biases.

    Args:
        stream: RngStream used for the weight draws
        layout: Sequence of (name, shape) entries

    Returns:
        ParamVector
    """
    layout = _validate_layout(layout)
    parts = []
    for name, shape in layout:
        if len(shape) == 2:
            fan_in, fan_out = shape
            bound = np.sqrt(6.0 / (fan_in + fan_out))
            parts.append(stream.uniform(-bound, bound, shape).ravel())
        else:
            parts.append(np.zeros(int(np.prod(shape))))
    return ParamVector(np.concatenate(parts), layout)


@dataclass
class GradReport:
    """Outcome of a finite-difference gradient check"""
    per_block_max_rel_err: dict = field(default_factory=dict)
    global_max_rel_err: float = 0.0
    h: float = 1e-5
    probes: int = 0

    def passed(self, tolerance=1e-5):
        return self.global_max_rel_err < tolerance

    def to_dict(self):
        return {
            "per_block_max_rel_err": dict(self.per_block_max_rel_err),
            "global_max_rel_err": self.global_max_rel_err,
            "h": self.h,
            "probes": self.probes,
        }


class GradientCheckError(ValueError):
    """Raised when the loss is not finite at a perturbed point"""

    def __init__(self, block, message):
        super().__init__(message)
        self.block = block


def relative_error(analytic, numeric):
    return np.abs(analytic - numeric) / np.maximum(1e-8, np.maximum(np.abs(analytic), np.abs(numeric)))


def grad_check(params, loss, h=1e-5, stream=None, coords_per_block=200):
    """
    Compare an analytic gradient with central differences

    Args:
        params: ParamVector at which to check
        loss: Callable mapping a flat value array to (loss, gradient array)
        h: Finite-difference step, within [1e-7, 1e-3]
        stream: RngStream choosing the probed coordinates of large blocks
        coords_per_block: Coordinates probed per block (all if the block is smaller)

    Returns:
        GradReport

    Raises:
        GradientCheckError: If the loss is not finite at some probe
    """
    if not 1e-7 <= h <= 1e-3:
        raise ValueError(f"h must lie in [1e-7, 1e-3], got {h}")
    stream = stream or RngStream(0, STREAM_GRADCHECK)

    base = np.array(params.values)
    value, analytic = loss(base)
    if not np.isfinite(value):
        raise GradientCheckError(params.names[0], "Loss is not finite at the base point")
    analytic = np.asarray(analytic, dtype=np.float64)

    report = GradReport(h=h)
    for name in params.names:
        sl = params.block_slice(name)
        size = sl.stop - sl.start
        if size <= coords_per_block:
            coords = np.arange(sl.start, sl.stop)
        else:
            coords = sl.start + np.sort(stream.choice(size, coords_per_block, replace=False))

        worst = 0.0
        for i in coords:
            probe = base.copy()
            probe[i] = base[i] + h
            plus, _ = loss(probe)
            probe[i] = base[i] - h
            minus, _ = loss(probe)
            if not (np.isfinite(plus) and np.isfinite(minus)):
                raise GradientCheckError(name, f"Loss is not finite when probing block '{name}'")
            numeric = (plus - minus) / (2.0 * h)
            worst = max(worst, float(relative_error(analytic[i], numeric)))
            report.probes += 1
        report.per_block_max_rel_err[name] = worst

    report.global_max_rel_err = max(report.per_block_max_rel_err.values())
    return report
