"""kirchlab: a spectral laboratory for Kirchhoff-type quasilinear waves.

Solutions live in frequency space as discrete spectral measures; the
package evolves them, evaluates modified-energy functionals with fast
prefix/suffix-sum kernels, and runs verification suites for the
cancellation identities, kernel bounds, comparability, derivative
scaling, and the linearized coefficient-matching obstruction.
"""

__version__ = "0.1.0"
