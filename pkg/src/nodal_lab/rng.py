"""Deterministic seed derivation for reproducible experiment trials.

Every random draw in the lab flows from (master seed, subcommand tag, trial
index) through a cryptographic hash, so adding subcommands or reordering
trial dispatch never perturbs existing results, and worker count cannot
change any stream.
"""

from __future__ import annotations

import hashlib

import numpy as np


def derive_entropy(master_seed: int, tag: str, index: int) -> int:
    digest = hashlib.sha256(f"{master_seed}:{tag}:{index}".encode()).digest()
    return int.from_bytes(digest[:16], "big")


def trial_rng(master_seed: int, tag: str, index: int) -> np.random.Generator:
    """Independent generator for one trial of one subcommand."""
    return np.random.default_rng(np.random.SeedSequence(derive_entropy(master_seed, tag, index)))
