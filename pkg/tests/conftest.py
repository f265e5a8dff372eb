import numpy as np
import pytest

from embgep import data, evolution


@pytest.fixture(scope="session")
def synth85():
    return data.synthesize(data.EMBANKMENT_SUMMARY, 85, np.random.default_rng(42))


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)


def random_chromosome(rng, num_genes=4, head_size=7, num_inputs=3):
    config = evolution.GepConfig(
        num_chromosomes=2, head_size=head_size, num_genes=num_genes, num_inputs=num_inputs
    )
    return evolution.initialize(config, rng)[0]
