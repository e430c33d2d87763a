"""
Exponential Dichotomy Checker
-----------------------------
Verification, estimation and construction of exponential dichotomies for
linear difference equations x(k+1) = A(k)x(k) with possibly noninvertible
coefficients.
"""

__version__ = '0.1.0'
