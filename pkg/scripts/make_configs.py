"""Write the example configs in configs/ from fixed seeds."""
import json
from pathlib import Path

import numpy as np

from swolff.cli import encode_matrix
from swolff.lattice import SpinLattice, random_hermitian, uniform_site
from swolff.local_sw import random_block_diagonal_edge

OUT = Path(__file__).resolve().parent.parent / "configs"


def write(name, cfg):
    (OUT / name).write_text(json.dumps(cfg, indent=2) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    write("two_level.json", {
        "model": {"type": "raw", "H0": [[0, 0], [0, 2]], "V": [[0, 1], [1, 0]], "I0": [-0.5, 0.5]},
        "epsilon": 0.2, "order": 4, "tasks": ["exact"], "seed": 0,
    })
    write("two_level_diagrams.json", {
        "model": {"type": "raw", "H0": [[0, 0], [0, 2]], "V": [[0, 1], [1, 0]], "I0": [-0.5, 0.5]},
        "epsilon": [0.04, 0.02, 0.01], "order": 6, "tasks": ["series", "diagrams"], "seed": 0,
    })

    rng = np.random.default_rng(7)
    site = {"levels": [0.0, 0.0, 1.0], "low_dim": 2}
    write("chain3_qutrit.json", {
        "model": {
            "type": "lattice",
            "sites": [site] * 3,
            "edges": [{"u": i, "v": i + 1, "V": encode_matrix(random_hermitian(rng, 9))} for i in range(2)],
        },
        "epsilon": [0.02, 0.01, 0.005], "order": 3,
        "tasks": ["exact", "series", "local", "linked_cluster", "equivalence"], "seed": 7,
    })

    rng = np.random.default_rng(11)
    sites = [uniform_site(3, 1, 1.0) for _ in range(3)]
    base = SpinLattice(sites, [])
    edges = [random_block_diagonal_edge(base, i, i + 1, rng) for i in range(2)]
    write("stability_chain.json", {
        "model": {
            "type": "lattice",
            "sites": [{"levels": [0.0, 1.0, 2.0], "low_dim": 1}] * 3,
            "edges": [{"u": i, "v": i + 1, "V": encode_matrix(V)} for i, V in enumerate(edges)],
        },
        "epsilon": 0.03, "order": 2, "tasks": ["stability"], "seed": 11,
    })


if __name__ == "__main__":
    main()
