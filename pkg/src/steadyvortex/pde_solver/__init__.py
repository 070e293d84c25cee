"""Grid solvers for concentrated steady vortices and their diagnostics."""
