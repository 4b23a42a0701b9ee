"""Finite-domain situation-calculus workbench for agent abstraction."""
