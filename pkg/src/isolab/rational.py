"""Rational functions stored by their partial-fraction data.

A :class:`RationalFunction` is a finite sum of principal parts

    sum_c sum_k  coeffs_c[k-1] / (z - c)**k

plus a polynomial tail.  Products are formed pole by pole from local
Laurent expansions, so no numerator/denominator polynomials are ever
divided; this is the shape the scalar reduction produces and it keeps
residues accurate when poles are close.
"""

from math import comb, factorial

import numpy as np
from numpy.polynomial import polynomial as P

_MERGE_TOL = 1e-13


def _same_point(a, b):
    return abs(a - b) <= _MERGE_TOL * (1.0 + abs(a))


class RationalFunction:
    """Pole-centered rational function in one complex variable."""

    def __init__(self, poles=(), poly=()):
        merged = []
        for center, coeffs in poles:
            coeffs = np.array(coeffs, dtype=complex).ravel()
            for i, (c, existing) in enumerate(merged):
                if _same_point(c, center):
                    n = max(len(existing), len(coeffs))
                    acc = np.zeros(n, dtype=complex)
                    acc[: len(existing)] += existing
                    acc[: len(coeffs)] += coeffs
                    merged[i] = (c, acc)
                    break
            else:
                merged.append((complex(center), coeffs))
        self.poles = [(c, k) for c, k in merged if len(k)]
        poly = np.array(poly, dtype=complex).ravel()
        self.poly = P.polytrim(poly, 0.0) if len(poly) else np.zeros(0, dtype=complex)
        if len(self.poly) == 1 and self.poly[0] == 0:
            self.poly = np.zeros(0, dtype=complex)

    # -- construction -----------------------------------------------------

    @classmethod
    def constant(cls, value):
        return cls(poly=[value])

    @classmethod
    def pole(cls, center, coeff=1.0, order=1):
        coeffs = np.zeros(order, dtype=complex)
        coeffs[order - 1] = coeff
        return cls(poles=[(center, coeffs)])

    @classmethod
    def simple_fractions(cls, centers, residues):
        """``sum_i residues[i] / (z - centers[i])``."""
        return cls(poles=[(c, [r]) for c, r in zip(centers, residues)])

    # -- inspection -------------------------------------------------------

    @property
    def centers(self):
        return [c for c, _ in self.poles]

    def _coeffs_at(self, center):
        for c, k in self.poles:
            if _same_point(c, center):
                return k
        return np.zeros(0, dtype=complex)

    def principal_part(self, center):
        """Coefficients of ``(z-center)^-1, (z-center)^-2, ...``."""
        return self._coeffs_at(center).copy()

    def residue(self, center):
        k = self._coeffs_at(center)
        return complex(k[0]) if len(k) else 0j

    def order_at(self, center, tol=0.0):
        """Pole order at ``center`` ignoring coefficients with modulus <= tol."""
        k = self._coeffs_at(center)
        big = np.nonzero(np.abs(k) > tol)[0]
        return int(big[-1]) + 1 if len(big) else 0

    @property
    def degree(self):
        """Degree of the polynomial tail (-1 for no tail)."""
        return len(self.poly) - 1

    # -- evaluation -------------------------------------------------------

    def __call__(self, z):
        z = complex(z)
        total = P.polyval(z, self.poly) if len(self.poly) else 0j
        for c, k in self.poles:
            w = 1.0 / (z - c)
            total += P.polyval(w, np.concatenate([[0], k]))
        return complex(total)

    def laurent(self, center, upto):
        """Laurent coefficients at ``center`` for powers ``-order .. upto``.

        Returned as ``(lowest_power, coeffs)`` with ``coeffs[i]`` the
        coefficient of ``(z-center)**(lowest_power + i)``.
        """
        own = self._coeffs_at(center)
        low = -len(own)
        out = np.zeros(upto - low + 1, dtype=complex)
        for j, a in enumerate(own):
            out[-(j + 1) - low] += a
        if upto < 0:
            return low, out
        for c, k in self.poles:
            if _same_point(c, center):
                continue
            d = center - c
            for j, a in enumerate(k, start=1):
                for m in range(upto + 1):
                    out[m - low] += a * (-1) ** m * comb(j + m - 1, m) * d ** (-j - m)
        if len(self.poly):
            deriv = self.poly
            for m in range(min(upto, len(self.poly) - 1) + 1):
                out[m - low] += P.polyval(center, deriv) / factorial(m)
                deriv = P.polyder(deriv)
        return low, out

    def laurent_at_infinity(self, lowest):
        """Expansion in powers of z at infinity, powers ``degree .. lowest``.

        Returned as ``(lowest, coeffs)`` with ``coeffs[i]`` the coefficient
        of ``z**(lowest + i)``.
        """
        top = max(self.degree, lowest)
        out = np.zeros(top - lowest + 1, dtype=complex)
        for i, a in enumerate(self.poly):
            if i >= lowest:
                out[i - lowest] += a
        for c, k in self.poles:
            for j, a in enumerate(k, start=1):
                m = 0
                while -j - m >= lowest:
                    out[-j - m - lowest] += a * comb(j + m - 1, m) * c ** m
                    m += 1
        return lowest, out

    # -- arithmetic -------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        n = max(len(self.poly), len(other.poly))
        poly = np.zeros(n, dtype=complex)
        poly[: len(self.poly)] += self.poly
        poly[: len(other.poly)] += other.poly
        return RationalFunction(self.poles + other.poles, poly)

    __radd__ = __add__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if np.isscalar(other):
            return RationalFunction([(c, k * other) for c, k in self.poles], self.poly * other)
        other = _coerce(other)
        centers = list(self.centers)
        for c in other.centers:
            if not any(_same_point(c, x) for x in centers):
                centers.append(c)
        poles = []
        for c in centers:
            of, og = len(self._coeffs_at(c)), len(other._coeffs_at(c))
            order = of + og
            if order == 0:
                continue
            lf, cf = self.laurent(c, og - 1)
            lg, cg = other.laurent(c, of - 1)
            prod = np.convolve(cf, cg)
            low = lf + lg
            coeffs = np.array([prod[-j - low] if 0 <= -j - low < len(prod) else 0 for j in range(1, order + 1)])
            poles.append((c, coeffs))
        df, dg = max(self.degree, 0), max(other.degree, 0)
        lf, cf = self.laurent_at_infinity(-dg)
        lg, cg = other.laurent_at_infinity(-df)
        prod = np.convolve(cf, cg)
        low = lf + lg
        tail = prod[-low:] if low <= 0 else np.concatenate([np.zeros(low, dtype=complex), prod])
        return RationalFunction(poles, tail)

    __rmul__ = __mul__

    def derivative(self):
        poles = []
        for c, k in self.poles:
            d = np.zeros(len(k) + 1, dtype=complex)
            for j, a in enumerate(k, start=1):
                d[j] = -j * a
            poles.append((c, d))
        return RationalFunction(poles, P.polyder(self.poly) if len(self.poly) > 1 else [])

    def trimmed(self, tol):
        """Drop principal-part and tail coefficients with modulus <= tol."""
        poles = []
        for c, k in self.poles:
            k = np.where(np.abs(k) > tol, k, 0)
            big = np.nonzero(k)[0]
            if len(big):
                poles.append((c, k[: big[-1] + 1]))
        tail = np.where(np.abs(self.poly) > tol, self.poly, 0)
        return RationalFunction(poles, tail)

    def __repr__(self):
        parts = [f"{c:.6g}: {np.round(k, 6).tolist()}" for c, k in self.poles]
        return f"RationalFunction(poles={{{', '.join(parts)}}}, poly={np.round(self.poly, 6).tolist()})"


def _coerce(x):
    if isinstance(x, RationalFunction):
        return x
    return RationalFunction.constant(complex(x))
