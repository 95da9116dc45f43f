"""Analytic reference trajectories with exact derivatives.

A reference channel is a sum of terms from a small family:

    ["const", c]      c
    ["ramp", c]       c * t
    ["sin", c, a]     c * sin(a*t)
    ["cos", c, a]     c * cos(a*t)
    ["tanh", c, a]    c * tanh(a*t)

Derivatives up to order 3 come from closed-form tables, so the controller
sees noise-free reference derivatives.
"""

import math

import numpy as np

from .errors import ValidationError

MAX_ORDER = 3

_ATOMS = {"const": 1, "ramp": 1, "sin": 2, "cos": 2, "tanh": 2}


def _term_value(term, t, order):
    name = term[0]
    c = term[1]
    if name == "const":
        return c if order == 0 else 0.0
    if name == "ramp":
        if order == 0:
            return c * t
        return c if order == 1 else 0.0
    a = term[2]
    if name == "sin":
        if order == 0:
            return c * math.sin(a * t)
        if order == 1:
            return c * a * math.cos(a * t)
        if order == 2:
            return -c * a * a * math.sin(a * t)
        return -c * a * a * a * math.cos(a * t)
    if name == "cos":
        if order == 0:
            return c * math.cos(a * t)
        if order == 1:
            return -c * a * math.sin(a * t)
        if order == 2:
            return -c * a * a * math.cos(a * t)
        return c * a * a * a * math.sin(a * t)
    # tanh
    th = math.tanh(a * t)
    sech2 = 1.0 - th * th
    if order == 0:
        return c * th
    if order == 1:
        return c * a * sech2
    if order == 2:
        return -2.0 * c * a * a * th * sech2
    return -2.0 * c * a * a * a * sech2 * (1.0 - 3.0 * th * th)


def _validate_terms(terms):
    out = []
    for term in terms:
        term = list(term)
        if not term or term[0] not in _ATOMS:
            raise ValidationError(f"unknown reference term {term!r}")
        name = term[0]
        want = 1 + _ATOMS[name]
        if len(term) != want:
            raise ValidationError(
                f"reference term {name!r} expects {want - 1} coefficient(s), got {term!r}"
            )
        coeffs = [float(v) for v in term[1:]]
        if not all(math.isfinite(v) for v in coeffs):
            raise ValidationError(f"non-finite coefficient in reference term {term!r}")
        out.append((name, *coeffs))
    return tuple(out)


class ReferenceSignal:
    """A vector-valued analytic trajectory t -> y*(t) in R^n."""

    def __init__(self, channels):
        if not channels:
            raise ValidationError("reference needs at least one channel")
        self.channels = tuple(_validate_terms(ch) for ch in channels)
        self.n = len(self.channels)

    def eval(self, t, order=0):
        if not (0 <= order <= MAX_ORDER):
            raise ValidationError(f"derivative order {order} outside 0..{MAX_ORDER}")
        return np.array(
            [sum(_term_value(term, t, order) for term in ch) for ch in self.channels]
        )

    def stack(self, t, max_order):
        """Derivatives 0..max_order stacked into shape (max_order + 1, n)."""
        return np.stack([self.eval(t, k) for k in range(max_order + 1)])

    def to_data(self):
        return [[list(term) for term in ch] for ch in self.channels]


def constant(values):
    return ReferenceSignal([[("const", float(v))] for v in values])


def zero(n):
    return constant([0.0] * n)
