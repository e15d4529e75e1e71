"""Exact scalar arithmetic for the oscillator series.

Every quantity produced by the symbolic pipeline is a finite sum of terms

    (rational coefficient) * alpha**(p/2) * lambda**a * J**b

with p an integer (half-integer powers of alpha are the natural currency
here) and a, b non-negative integers.  Coefficients are `fractions.Fraction`,
so all arithmetic is exact; floats appear only in `ScalarSeries.evaluate`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable

__all__ = [
    "Rational",
    "ScalarTerm",
    "ScalarSeries",
    "DivergentIntegral",
    "NonPositiveAlpha",
]

# Exact rational coefficients; arbitrary-precision by construction.
Rational = Fraction


class DivergentIntegral(ArithmeticError):
    """A wedge integral fails to decay (alpha <= 0 or a malformed integrand)."""


class NonPositiveAlpha(DivergentIntegral, ValueError):
    """Raised when a series is evaluated at alpha <= 0 (the metric diverges there)."""


@dataclass(frozen=True)
class ScalarTerm:
    """One monomial: coeff * alpha**(alpha_half_pow/2) * lambda**lambda_pow * J**j_pow."""

    coeff: Fraction
    alpha_half_pow: int = 0
    lambda_pow: int = 0
    j_pow: int = 0

    def __post_init__(self):
        if self.lambda_pow < 0 or self.j_pow < 0:
            raise ValueError("coupling powers must be non-negative")
        if not isinstance(self.coeff, Fraction):
            object.__setattr__(self, "coeff", Fraction(self.coeff))

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.lambda_pow, self.j_pow, self.alpha_half_pow)

    def evaluate(self, alpha: float, lam: float = 0.0, j: float = 0.0) -> float:
        if alpha <= 0:
            raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
        return (
            float(self.coeff)
            * float(alpha) ** (self.alpha_half_pow / 2)
            * float(lam) ** self.lambda_pow
            * float(j) ** self.j_pow
        )


@dataclass(frozen=True)
class ScalarSeries:
    """Canonical sum of ScalarTerms, merged and sorted by (lambda_pow, j_pow, alpha_half_pow)."""

    terms: tuple[ScalarTerm, ...] = ()

    @classmethod
    def from_terms(cls, terms: Iterable[ScalarTerm]) -> "ScalarSeries":
        merged: dict[tuple[int, int, int], Fraction] = {}
        for t in terms:
            merged[t.key] = merged.get(t.key, Fraction(0)) + t.coeff
        out = [
            ScalarTerm(c, key[2], key[0], key[1])
            for key, c in merged.items()
            if c != 0
        ]
        out.sort(key=lambda t: t.key)
        return cls(tuple(out))

    @classmethod
    def term(
        cls,
        coeff,
        alpha_half_pow: int = 0,
        lambda_pow: int = 0,
        j_pow: int = 0,
    ) -> "ScalarSeries":
        c = Fraction(coeff)
        if c == 0:
            return cls()
        return cls((ScalarTerm(c, alpha_half_pow, lambda_pow, j_pow),))

    @classmethod
    def zero(cls) -> "ScalarSeries":
        return cls()

    @classmethod
    def one(cls) -> "ScalarSeries":
        return cls.term(1)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "ScalarSeries") -> "ScalarSeries":
        return ScalarSeries.from_terms(self.terms + other.terms)

    def __neg__(self) -> "ScalarSeries":
        return ScalarSeries(
            tuple(
                ScalarTerm(-t.coeff, t.alpha_half_pow, t.lambda_pow, t.j_pow)
                for t in self.terms
            )
        )

    def __sub__(self, other: "ScalarSeries") -> "ScalarSeries":
        return self + (-other)

    def __mul__(self, other) -> "ScalarSeries":
        if isinstance(other, (int, Fraction)):
            other = ScalarSeries.term(other)
        if not isinstance(other, ScalarSeries):
            return NotImplemented
        prods = [
            ScalarTerm(
                a.coeff * b.coeff,
                a.alpha_half_pow + b.alpha_half_pow,
                a.lambda_pow + b.lambda_pow,
                a.j_pow + b.j_pow,
            )
            for a in self.terms
            for b in other.terms
        ]
        return ScalarSeries.from_terms(prods)

    __rmul__ = __mul__

    def __pow__(self, n: int) -> "ScalarSeries":
        if n < 0:
            raise ValueError("negative series powers are not defined")
        out = ScalarSeries.one()
        for _ in range(n):
            out = out * self
        return out

    def truncate_lambda(self, max_pow: int) -> "ScalarSeries":
        return ScalarSeries(tuple(t for t in self.terms if t.lambda_pow <= max_pow))

    def evaluate(self, alpha: float, lam: float = 0.0, j: float = 0.0) -> float:
        if alpha <= 0:
            raise NonPositiveAlpha(f"alpha must be > 0, got {alpha}")
        return sum(t.evaluate(alpha, lam, j) for t in self.terms)

    # -- canonical text form ------------------------------------------------
    #
    # Example: "1/32 * a^-2 - 11/512 * l * a^-7/2"
    # Symbols: a = alpha (half-integer exponents), l = lambda, j = J.

    def render(self) -> str:
        if not self.terms:
            return "0"
        pieces = []
        for i, t in enumerate(self.terms):
            sign = "-" if t.coeff < 0 else "+"
            factors = []
            mag = abs(t.coeff)
            for sym, pow_ in (("l", t.lambda_pow), ("j", t.j_pow)):
                if pow_ == 1:
                    factors.append(sym)
                elif pow_ > 1:
                    factors.append(f"{sym}^{pow_}")
            if t.alpha_half_pow:
                if t.alpha_half_pow % 2 == 0:
                    exp = str(t.alpha_half_pow // 2)
                else:
                    exp = f"{t.alpha_half_pow}/2"
                factors.append("a" if exp == "1" else f"a^{exp}")
            if mag != 1 or not factors:
                factors.insert(0, str(mag))
            text = " * ".join(factors)
            if i == 0:
                pieces.append(f"-{text}" if sign == "-" else text)
            else:
                pieces.append(f" {sign} {text}")
        return "".join(pieces)

    __str__ = render

    @classmethod
    def parse(cls, text: str) -> "ScalarSeries":
        """Inverse of render(); accepts the canonical text form."""
        text = text.strip()
        if text == "0":
            return cls.zero()
        lead = 1
        if text.startswith("-"):
            lead = -1
            text = text[1:].strip()
        # term separators are space-padded; the minus in "a^-2" is not
        chunks = re.split(r" ([+-]) ", text)
        it = iter(chunks)
        parts: list[tuple[int, str]] = [(lead, next(it).strip())]
        for sign_tok, body in zip(it, it):
            parts.append((-1 if sign_tok == "-" else 1, body.strip()))
        terms = []
        for sign, body in parts:
            coeff = Fraction(sign)
            half_pow = 0
            l_pow = 0
            j_pow = 0
            for factor in (f.strip() for f in body.split("*")):
                m = re.fullmatch(r"([alj])(?:\^(-?\d+(?:/2)?))?", factor)
                if m:
                    sym, exp_tok = m.group(1), m.group(2) or "1"
                    exp = Fraction(exp_tok)
                    if sym == "a":
                        if (2 * exp).denominator != 1:
                            raise ValueError(f"bad alpha exponent in {factor!r}")
                        half_pow += int(2 * exp)
                    elif sym == "l":
                        l_pow += int(exp)
                    else:
                        j_pow += int(exp)
                else:
                    coeff *= Fraction(factor)
            terms.append(ScalarTerm(coeff, half_pow, l_pow, j_pow))
        return cls.from_terms(terms)
