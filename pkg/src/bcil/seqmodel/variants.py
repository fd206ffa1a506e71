"""Which of the 18 recorded columns (slave 9 | master 9) each model reads and predicts."""

from __future__ import annotations

from dataclasses import dataclass

SLAVE = tuple(range(0, 9))
MASTER = tuple(range(9, 18))
BOTH = SLAVE + MASTER


@dataclass(frozen=True)
class ModelVariant:
    name: str
    inputs: tuple
    outputs: tuple

    @property
    def n_in(self) -> int:
        return len(self.inputs)

    @property
    def n_out(self) -> int:
        return len(self.outputs)

    @property
    def supports_ar(self) -> bool:
        """Free running needs the output to be a valid next input."""
        return self.inputs == self.outputs


S2S = ModelVariant("S2S", SLAVE, SLAVE)
S2M = ModelVariant("S2M", SLAVE, MASTER)
SM2SM = ModelVariant("SM2SM", BOTH, BOTH)

VARIANTS = {v.name: v for v in (S2S, S2M, SM2SM)}


def get_variant(name: str) -> ModelVariant:
    try:
        return VARIANTS[name.upper()]
    except KeyError:
        raise ValueError(f"unknown model variant {name!r}; expected one of {sorted(VARIANTS)}") from None
