"""Finite-truncation fermionic white-noise operator calculus."""
