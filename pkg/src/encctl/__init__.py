"""Encrypted state-feedback control: ElGamal primitives, the identification
adversary, and joint design of controller gain and key length."""

__version__ = "0.1.0"
