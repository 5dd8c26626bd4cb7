"""Finite-x computations for sums p + b of a prime and a member of a sparse set B."""

from .bsets import BSetKind, BSetSpec, Block, bset_count, enumerate_bset, theorem2_block
from .errors import (
    DomainError,
    InputError,
    InvariantError,
    PrimorialOverflowError,
    RangeError,
    ResourceError,
    RomanoffError,
)
from .sieve import PrimeTable, build_prime_table

__version__ = "0.1.0"
