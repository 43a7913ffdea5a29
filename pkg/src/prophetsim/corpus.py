"""Built-in instance corpus.

Twelve bundled instances spanning the regimes the verification suite cares
about: singletons, i.i.d. families with closed-form curves, scale mixtures,
heavy tails, an eight-item mix, a near-degenerate "dust plus sliver" design
whose schedule is only barely valid at the order-selection constant, and a
smoothed stand-in for the classical two-point hard instance.
"""
from __future__ import annotations

from importlib import resources

from .distributions import Instance, load_instance

CORPUS_LABELS = (
    "01_one_uniform",
    "02_one_exponential",
    "03_iid_uniform_2",
    "04_iid_exponential_3",
    "05_iid_uniform_5",
    "06_two_scales",
    "07_separated",
    "08_mixed_3",
    "09_mixed_5",
    "10_mixed_8",
    "11_dust_sliver_8",
    "12_hard_two_point",
)

# stressor for fault-sensitivity runs: schedule is valid at the
# order-selection constant but breaks at the i.i.d. constant
FAULT_WITNESS_LABEL = "11_dust_sliver_8"


def corpus_path(label: str):
    """Filesystem path of a bundled instance (context-manager free for tests)."""
    if label not in CORPUS_LABELS:
        raise KeyError(f"unknown corpus label {label!r}")
    return resources.files(__package__) / "instances" / f"{label}.json"


def load_corpus_instance(label: str) -> Instance:
    return load_instance(str(corpus_path(label)))


def load_corpus() -> tuple[Instance, ...]:
    """All twelve instances in label order."""
    return tuple(load_corpus_instance(lbl) for lbl in CORPUS_LABELS)
