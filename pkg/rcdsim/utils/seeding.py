"""
Seed derivation for reproducible, scheduling-independent Monte Carlo.

Each trial owns the child ``SeedSequence(master_seed, spawn_key=(index,))``,
the same child ``SeedSequence(master_seed).spawn`` would hand out; inside a
trial the event stream and the replacement law draw from two independent
grandchildren. Generators are insured independent as long as fewer than
2^64 of them are spawned.
"""

from numpy.random import SFC64, Generator, SeedSequence


def trial_seed(master_seed: int, trial_index: int) -> SeedSequence:
    """Seed of trial ``trial_index``."""
    return SeedSequence(master_seed, spawn_key=(trial_index,))


def split_trial_seed(seed: SeedSequence) -> tuple[SeedSequence, Generator]:
    """Return (event stream seed, replacement-law generator) for one trial."""
    event_seed, function_seed = seed.spawn(2)
    return event_seed, Generator(SFC64(function_seed))


def generator(master_seed: int) -> Generator:
    """Single generator for one-off sampling (studies, self-tests)."""
    return Generator(SFC64(SeedSequence(master_seed)))
