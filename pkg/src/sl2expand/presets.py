"""Named generator sets."""

from .sl2core import GenSet, parse_matrix

# Entry degree 1 over F_3; no relation of length <= 22 (exhaustive reduced-word search).
FREE_PAIR_F3 = ("[[0;1];[2;0,1]]@3", "[[0,1;1];[2,1;1]]@3")
FREE_PAIR_F3_DEPTH = 22

# Unipotent pair over F_3; each generator has order 3, so it is never free.
UNIPOTENT_F3 = ("[[1;0,1];[0;1]]@3", "[[1;0];[0,1;1]]@3")

PRESETS = {
    "free3": FREE_PAIR_F3,
    "unipotent3": UNIPOTENT_F3,
}


def preset_genset(name: str) -> GenSet:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}")
    return GenSet(parse_matrix(s) for s in PRESETS[name])
