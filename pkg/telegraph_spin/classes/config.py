"""Run configuration structure."""

import copy
from collections.abc import Mapping
from dataclasses import dataclass
from typing import Any

from ..const import (
    CONF_ENGINE,
    CONF_HYPERFINE_MHZ,
    CONF_INIT,
    CONF_LEVELS,
    CONF_MODEL,
    CONF_SEED,
    CONF_STOCHASTIC,
    CONF_T1_US,
    Engine,
)

ALL_ENGINES = (Engine.ANALYTIC, Engine.MC, Engine.LINDBLAD)


@dataclass(frozen=True)
class RunConfig:
    """Validated configuration after defaults, file values and flags are merged."""

    data: Mapping[str, Any]

    def section(self, name: str) -> Mapping[str, Any]:
        """Return one section."""
        return self.data[name]

    @property
    def engine(self) -> Engine:
        """Return the engine selector."""
        return Engine(self.data[CONF_ENGINE])

    @property
    def engines(self) -> tuple[Engine, ...]:
        """Return the selected engines in run order."""
        return ALL_ENGINES if self.engine == Engine.ALL else (self.engine,)

    @property
    def levels(self) -> int:
        """Return the fluctuator level count."""
        return self.data[CONF_MODEL][CONF_LEVELS]

    @property
    def t1(self) -> float:
        """Return the fluctuator T1 in us."""
        return self.data[CONF_MODEL][CONF_T1_US]

    @property
    def hyperfine_mhz(self) -> float:
        """Return the hyperfine coupling in MHz."""
        return self.data[CONF_MODEL][CONF_HYPERFINE_MHZ]

    @property
    def init_state(self) -> int | str:
        """Return the initial fluctuator state."""
        return self.data[CONF_MODEL][CONF_INIT]

    @property
    def seed(self) -> int | None:
        """Return the Monte Carlo seed."""
        return self.data[CONF_STOCHASTIC][CONF_SEED]

    def as_dict(self) -> dict[str, Any]:
        """Return a plain copy suitable for embedding in outputs."""
        return copy.deepcopy(dict(self.data))
