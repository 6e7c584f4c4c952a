"""vestbench: vibrotactile information-coding engine and experiment bench
for a simulated 40-motor body-worn vest."""

__version__ = "0.1.0"
