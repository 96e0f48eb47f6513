//! Symbolic Pauli–boson operator algebra (work in progress).
