from __future__ import annotations

from cpd.commands import bounds, denoise, detect, gen_signal, run

COMMANDS = (gen_signal, denoise, bounds, detect, run)

__all__ = ["COMMANDS"]
