"""Exact solution of the 1D dam break over a wet bed (left rarefaction, right shock)."""

from __future__ import annotations

import numpy as np
from scipy.optimize import brentq

from .grid import G_DEFAULT


def star_state(h_left: float, h_right: float, g: float = G_DEFAULT) -> tuple[float, float, float]:
    """Middle depth, middle velocity and shock speed for still water ``h_left > h_right > 0``."""
    if not h_left > h_right > 0:
        raise ValueError(f"need h_left > h_right > 0, got {h_left}, {h_right}")
    c_left = np.sqrt(g * h_left)

    def rarefaction(h):
        return 2.0 * (np.sqrt(g * h) - c_left)

    def shock(h):
        return (h - h_right) * np.sqrt(0.5 * g * (h + h_right) / (h * h_right))

    h_star = brentq(lambda h: rarefaction(h) + shock(h), h_right, h_left, xtol=1e-15, rtol=1e-15, maxiter=200)
    u_star = shock(h_star)
    speed = h_star * u_star / (h_star - h_right)
    return h_star, u_star, speed


def solution(x, t: float, h_left: float, h_right: float, x_dam: float = 0.0,
             g: float = G_DEFAULT) -> tuple[np.ndarray, np.ndarray]:
    """Depth and velocity at positions ``x`` and time ``t``."""
    x = np.asarray(x, dtype=float)
    if t <= 0:
        return np.where(x < x_dam, h_left, h_right), np.zeros_like(x)
    h_star, u_star, speed = star_state(h_left, h_right, g)
    c_left = np.sqrt(g * h_left)
    c_star = np.sqrt(g * h_star)
    xi = (x - x_dam) / t
    h = np.empty_like(xi)
    u = np.empty_like(xi)
    left = xi <= -c_left
    fan = (xi > -c_left) & (xi <= u_star - c_star)
    middle = (xi > u_star - c_star) & (xi <= speed)
    right = xi > speed
    h[left], u[left] = h_left, 0.0
    c_fan = (2.0 * c_left - xi[fan]) / 3.0
    h[fan] = c_fan**2 / g
    u[fan] = 2.0 * (c_left - c_fan)
    h[middle], u[middle] = h_star, u_star
    h[right], u[right] = h_right, 0.0
    return h, u


def shock_position(t: float, h_left: float, h_right: float, x_dam: float = 0.0, g: float = G_DEFAULT) -> float:
    return x_dam + star_state(h_left, h_right, g)[2] * t
