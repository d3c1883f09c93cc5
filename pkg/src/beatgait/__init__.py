"""Rhythm-synchronized quadruped gait controller, desk scale.

Load-coupled phase oscillators drive a surrogate stance plant; a music
pipeline turns audio into beat phase; a 20 Hz modulator locks one
leg's footfall to the beat. See the harness module for runnable
scenarios and the command line entry point in cli.
"""

__version__ = "0.1.0"
