"""LWE parameter sets for the reference PIR scheme and the serving gate."""

from __future__ import annotations

import hashlib
import math
import struct
from dataclasses import asdict, dataclass

# Folding squares the response size in n, so two-dimensional layouts use a
# smaller lattice by default to stay desk-scale.
DIMS2_DEFAULT_N = 128

# Sub-gaussian tail multiplier used by the noise estimate. Eight standard
# deviations puts the per-coefficient failure probability below 2**-45.
TAIL_SIGMAS = 8.0


class ParameterError(ValueError):
    """Raised for inconsistent or unsafe parameter sets."""


@dataclass(frozen=True)
class LweParams:
    n: int = 1024
    q_bits: int = 32
    p_bits: int = 8
    sigma: float = math.sqrt(41.0)
    dims: int = 1
    n1: int = 1024
    n2: int = 1
    slot_bytes: int = 256

    def __post_init__(self):
        if self.n < 1:
            raise ParameterError("lattice dimension must be positive")
        if not 1 <= self.q_bits <= 32:
            raise ParameterError("q_bits must be in [1, 32] (native 32-bit words)")
        if self.p_bits not in (1, 2, 4, 8):
            raise ParameterError("p_bits must divide 8")
        if self.p_bits >= self.q_bits:
            raise ParameterError("plaintext modulus must be smaller than ciphertext modulus")
        if self.sigma <= 0:
            raise ParameterError("sigma must be positive")
        if self.dims not in (1, 2):
            raise ParameterError("only 1 or 2 dimensions are supported")
        if self.n1 < 1 or self.n2 < 1:
            raise ParameterError("hypercube sides must be positive")
        if self.dims == 1 and self.n2 != 1:
            raise ParameterError("dims=1 requires n2 == 1")
        if self.slot_bytes < 1:
            raise ParameterError("slot_bytes must be positive")

    @classmethod
    def for_cache(cls, n_slots: int, slot_bytes: int, dims: int = 1, **kw) -> "LweParams":
        """Build a parameter set for a cache of ``n_slots`` slots.

        For two dimensions the grid is as square as possible, with the
        longer side first, and n defaults to DIMS2_DEFAULT_N.
        """
        if n_slots < 1:
            raise ParameterError("n_slots must be positive")
        if dims == 1:
            n1, n2 = n_slots, 1
        else:
            n2 = 1 << (max(n_slots.bit_length() - 1, 0) // 2)
            while n_slots % n2:
                n2 //= 2
            n1 = n_slots // n2
            kw.setdefault("n", DIMS2_DEFAULT_N)
        return cls(dims=dims, n1=n1, n2=n2, slot_bytes=slot_bytes, **kw)

    @property
    def q(self) -> int:
        return 1 << self.q_bits

    @property
    def p(self) -> int:
        return 1 << self.p_bits

    @property
    def delta(self) -> int:
        return 1 << (self.q_bits - self.p_bits)

    @property
    def n_slots(self) -> int:
        return self.n1 * self.n2

    @property
    def digits_per_slot(self) -> int:
        return self.slot_bytes * 8 // self.p_bits

    @property
    def digits_per_word(self) -> int:
        """Base-p digits needed to carry one ciphertext word (ceil(q_bits / p_bits))."""
        return -(-self.q_bits // self.p_bits)

    @property
    def expansion_factor(self) -> int:
        """Outer ciphertext words produced per inner word when folding dims=2."""
        return (self.n + 1) * self.digits_per_word

    @property
    def eta(self) -> int:
        """Centered-binomial width matching sigma (variance eta / 2)."""
        return max(1, round(2 * self.sigma ** 2))

    @property
    def serving_fan_in(self) -> int:
        return max(self.n1, self.n2)

    def encode(self) -> bytes:
        return struct.pack(
            "<IBBdBIII", self.n, self.q_bits, self.p_bits, self.sigma,
            self.dims, self.n1, self.n2, self.slot_bytes,
        )

    @property
    def digest(self) -> bytes:
        return hashlib.sha256(b"pirdns-lwe-params\x00" + self.encode()).digest()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LweParams":
        return cls(**{k: data[k] for k in cls.__dataclass_fields__})


def noise_margin(params: LweParams, fan_in: int) -> float:
    """Bits of headroom left after an inner product of ``fan_in`` terms.

    Plaintext digits are at most p - 1 and the fresh error is sub-gaussian
    with parameter sigma, so the accumulated error is bounded (with
    overwhelming probability) by TAIL_SIGMAS * sigma * (p - 1) * sqrt(fan_in).
    Decryption is correct while that stays below q / (2p).
    """
    if fan_in < 1:
        raise ValueError("fan_in must be >= 1")
    budget = params.q_bits - params.p_bits - 1
    growth = math.log2(TAIL_SIGMAS * params.sigma * max(params.p - 1, 1) * math.sqrt(fan_in))
    return budget - growth


def ensure_serviceable(params: LweParams) -> float:
    """Refuse to serve a parameter set whose noise margin is not positive."""
    margin = noise_margin(params, params.serving_fan_in)
    if margin <= 0:
        raise ParameterError(
            f"noise margin {margin:.2f} bits at fan-in {params.serving_fan_in}; refusing to serve"
        )
    return margin
