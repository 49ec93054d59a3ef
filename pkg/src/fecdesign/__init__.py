"""Design and verification toolkit for concatenated LDPC/staircase FEC.

The package covers the full design pipeline:

* ``channel``   -- QPSK/AWGN model, SNR conversions, constrained capacity
* ``ensemble``  -- degree-distribution algebra and complexity scores
* ``exitchart`` -- Monte-Carlo EXIT functions and the iteration functional
* ``optimizer`` -- complexity-minimizing ensemble search and Pareto sweeps
* ``codegen``   -- random and quasi-cyclic parity-check construction
* ``decoder``   -- sum-product / offset-min-sum decoding and BER simulation
* ``concat``    -- inner/outer composition, interleaving, adjudication
* ``cli``       -- command-line entry points
"""

__version__ = "0.1.0"


class Infeasible(Exception):
    """Raised when a design request admits no solution.

    This is a legitimate outcome of a design search, not a bug; the CLI maps
    it to exit status 1.
    """


class OpennessViolation(Infeasible):
    """EXIT curve touches or crosses the identity inside the decoding range."""

    def __init__(self, p, f_value):
        self.p = p
        self.f_value = f_value
        super().__init__(f"EXIT chart closed at p={p:.6g} (f={f_value:.6g})")
