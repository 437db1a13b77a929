"""命名实验：画廊、收敛、辛性与交换子、分布配对"""

from .appendix_a import (
    AffineHamiltonian,
    affine_commutator_check,
    compact_bump,
    lemma9_combination,
    named_map,
    symplectic_check,
)
from .convergence import run_convergence, run_lemma3
from .distributions import (
    PairingFamily,
    direct_pairing,
    distribution_pairing,
    pairing_family,
    prop6_experiment,
    prop7_experiment,
)
from .gallery import GALLERY_NAMES, GalleryEntry, gallery, polar_growth_caps, polar_model_field

__all__ = [
    "AffineHamiltonian",
    "GALLERY_NAMES",
    "GalleryEntry",
    "PairingFamily",
    "affine_commutator_check",
    "compact_bump",
    "direct_pairing",
    "distribution_pairing",
    "gallery",
    "lemma9_combination",
    "named_map",
    "pairing_family",
    "polar_growth_caps",
    "polar_model_field",
    "prop6_experiment",
    "prop7_experiment",
    "run_convergence",
    "run_lemma3",
    "symplectic_check",
]
