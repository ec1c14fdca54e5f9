"""Synthesis and exhaustive verification of binary32 Horner/FMA polynomial programs.

The package is organized around a bit-exact binary32 kernel (`f32`), an exact
rational LP solver (`lp`), the straight-line program model (`program`),
acceptance oracles built on certified enclosures (`oracle`), the randomized
coefficient-fixing heuristic (`synth`), and exhaustive scanners (`verify`).
"""

__version__ = "0.1.0"
