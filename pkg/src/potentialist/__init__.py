"""Modal logic of potentialist systems.

Decision procedures for S4, S4.2, S4.3 and S5 with countermodels, control
statements (switches, dials, buttons, railyards), simulations of Kripke
models by control statements over a sequence-extension system, a staged
universal enumerator over pluggable proof oracles, and a toy maximality lab.
"""

from .syntax import Formula, ParseError, parse, to_str

__version__ = "0.1.0"

__all__ = ["Formula", "ParseError", "parse", "to_str", "__version__"]
