"""Bilateral-control-based imitation learning workbench.

Simulated 3-DOF master/slave robots under 4ch bilateral control, scripted
demonstrations, from-scratch LSTM sequence models trained with teacher forcing
or autoregressive (free-running) learning, and an autonomous slave loop driven
by the trained model.
"""

__version__ = "0.1.0"
