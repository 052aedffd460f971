//! Measure distances used by convergence diagnostics.
