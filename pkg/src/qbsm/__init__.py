"""Numerical checks for randomness extraction against quantum side information.

Submodules
----------
opalg
    Dense Hermitian linear algebra and trace norms.
cqstate
    Distributions, cq-states, entropies and non-uniformity.
povm
    Measurements, state discrimination and guessing-probability brackets.
extract
    Seeded extractors, their compositions and worst-case error search.
adversary
    Bounded-storage encoders and exact attack evaluation.
theorems
    Registry of inequality checkers with case generators.
harness
    Command line interface, planner and report output.
"""

__version__ = "0.1.0"
