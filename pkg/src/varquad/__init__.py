"""Neural-network Ritz / least-squares solvers for 1D elliptic problems with
interchangeable quadrature strategies."""

__version__ = "0.1.0"
