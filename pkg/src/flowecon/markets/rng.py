"""Counter-based random streams.

Every draw comes from numpy's Philox generator keyed by
``SeedSequence(seed, spawn_key=(stream, step))``. Each purpose owns a fixed
stream index, so switching one feature on or off never shifts the draws of
another, and any step's draws can be regenerated without replaying the run.
"""

import numpy as np

STREAM_INIT = 0       # initial inventories, w-w entries, skill assignment
STREAM_PAIRING = 1    # one permutation of N per step
STREAM_ENDOWMENT = 2  # N uniform returns per step
STREAM_RETURNS = 3    # centralized returns (shared model shock or per-agent speculation)
STREAM_CHOICE = 4     # ablation: uniformly drawn product pair per agent pair


def substream(seed: int, stream: int, step: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(step)))
    return np.random.Generator(np.random.Philox(ss))


def random_pairing(agent_ids, rng: np.random.Generator) -> np.ndarray:
    """Uniform perfect matching: one shuffle, then adjacent pairs.

    Consumes exactly one ``rng.permutation(len(agent_ids))`` call. Returns an
    ``(N/2, 2)`` array of agent ids.
    """
    from .config import ConfigError

    ids = np.asarray(agent_ids, dtype=np.int64)
    if ids.ndim != 1 or ids.size % 2:
        raise ConfigError("n_agents", "random pairing needs an even number of agents, got %d" % ids.size)
    return ids[rng.permutation(ids.size)].reshape(-1, 2)
