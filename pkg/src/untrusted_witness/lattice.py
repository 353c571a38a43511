"""Deterministic detector-response patterns.

A pattern is a 6-bit string: bits 0..2 say whether Alice's detector clicks for
settings 1..3, bits 3..5 the same for Bob. Its integer code is
``sum(bit_k << k)``, so ``(1, 0, 0, 0, 1, 0)`` has code 17.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

N_SETTINGS = 3
N_BITS = 2 * N_SETTINGS
N_PATTERNS = 2**N_BITS


def pattern_code(bits) -> int:
    bits = tuple(int(b) for b in bits)
    if len(bits) != N_BITS or any(b not in (0, 1) for b in bits):
        raise ValueError(f"a click pattern is {N_BITS} bits of 0/1, got {bits}")
    return sum(b << k for k, b in enumerate(bits))


def pattern_bits(code: int) -> tuple[int, ...]:
    if not 0 <= code < N_PATTERNS:
        raise ValueError(f"pattern code must lie in [0, {N_PATTERNS}), got {code}")
    return tuple((code >> k) & 1 for k in range(N_BITS))


def enumerate_patterns() -> list[tuple[int, ...]]:
    """All 64 patterns in ascending code order."""
    return [pattern_bits(code) for code in range(N_PATTERNS)]


def alice_clicks(bits, setting: int) -> bool:
    """Whether Alice's detector clicks for ``setting`` (1-based)."""
    return bool(bits[setting - 1])


def bob_clicks(bits, setting: int) -> bool:
    return bool(bits[N_SETTINGS + setting - 1])


@dataclass(frozen=True)
class LambdaSets:
    """Membership masks over pattern codes.

    ``alice[i]`` (``bob[j]``) is a boolean mask of length 64 selecting the
    patterns where that party clicks for setting ``i`` (``j``). Row 0 is the
    identity "setting": every pattern, which makes marginal terms a special
    case of joint ones.
    """

    alice: np.ndarray
    bob: np.ndarray

    def set_a(self, i: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.alice[i]).tolist())

    def set_b(self, j: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.bob[j]).tolist())

    def complement_a(self, i: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(~self.alice[i]).tolist())

    def complement_b(self, j: int) -> frozenset[int]:
        return frozenset(np.flatnonzero(~self.bob[j]).tolist())

    def cell(self, i: int, j: int, alice_click: bool = True, bob_click: bool = True) -> np.ndarray:
        """Mask of ``Lambda^A_i (or its complement) & Lambda^B_j (or its complement)``."""
        ma = self.alice[i] if alice_click else ~self.alice[i]
        mb = self.bob[j] if bob_click else ~self.bob[j]
        return ma & mb


@lru_cache(maxsize=1)
def lambda_sets() -> LambdaSets:
    codes = np.arange(N_PATTERNS)
    alice = np.ones((N_SETTINGS + 1, N_PATTERNS), dtype=bool)
    bob = np.ones((N_SETTINGS + 1, N_PATTERNS), dtype=bool)
    for s in range(1, N_SETTINGS + 1):
        alice[s] = (codes >> (s - 1)) & 1 == 1
        bob[s] = (codes >> (N_SETTINGS + s - 1)) & 1 == 1
    alice.setflags(write=False)
    bob.setflags(write=False)
    return LambdaSets(alice, bob)
