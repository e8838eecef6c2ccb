"""Random-telegraph-noise decoherence of a nuclear-spin qubit coupled to a fluctuator."""

import json
from pathlib import Path

VERSION = json.loads((Path(__file__).parent / "manifest.json").read_text(encoding="utf8"))[
    "version"
]
