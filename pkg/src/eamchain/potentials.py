"""Scalar potential functions (pair, electron density, embedding) and checks.

An EAM potential is a triple of C^2 scalar functions: the pair interaction
``phi``, the per-neighbor electron density ``rho``, and the embedding energy
``G`` applied to the summed density.  Everything is dimensionless.  Three
parametric families are parseable from definition files:

* ``morse``      pair:       phi(r) = exp(-2 a (r-1)) - 2 exp(-a (r-1))
* ``expdecay``   density:    rho(r) = exp(-b (r-1))
* ``quadratic``  embedding:  G(d)   = c0/2 * d^2 - c1 * d

plus a ``zero`` tag for degenerate members (pure pair chains and the like).

The module also evaluates the sign conditions the stability analysis
assumes: the pair/density/embedding curvature signs (a1), nonnegativity of
the second-difference stability coefficient (a2), and the strict local
dominance condition under which the fully local model is the more stable
one (a3).  The conditions are checked at a single strain F; validity over an
interval is established by scanning (see scripts/scan_potentials.py) and
recorded per shipped potential in STABLE_RANGES.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np

from .textconfig import ConfigError, parse_kv_lines

__all__ = [
    "ScalarFunctionC2",
    "EAMPotential",
    "AssumptionReport",
    "check_assumptions",
    "validate_derivatives",
    "morse_pair",
    "expdecay_density",
    "quadratic_embedding",
    "zero_function",
    "load_potential_file",
    "parse_potential",
    "shipped_potential",
    "STABLE_RANGES",
    "mean_field_density",
]

POTENTIAL_KEYS = {
    "name",
    "family.pair",
    "family.density",
    "family.embedding",
    "alpha",
    "beta",
    "c0",
    "c1",
}

#: Documented strain ranges on which check_assumptions(...).a1_holds is true
#: for the shipped potentials (and a2 also holds for "default-eam").  These
#: were established by scripts/scan_potentials.py and are asserted in tests.
STABLE_RANGES = {
    "default-eam": (0.95, 1.15),
    "reversal-eam": (0.95, 1.15),
    "pair-morse": (0.95, 1.15),
}


@dataclass(frozen=True)
class ScalarFunctionC2:
    """A scalar function with analytic first and second derivatives."""

    eval: Callable[[float], float]
    d1: Callable[[float], float]
    d2: Callable[[float], float]
    label: str = ""

    def __call__(self, r: float) -> float:
        return self.eval(r)


@dataclass(frozen=True)
class EAMPotential:
    """Pair/density/embedding triple defining one EAM chain material."""

    pair: ScalarFunctionC2
    density: ScalarFunctionC2
    embedding: ScalarFunctionC2
    name: str = ""


@dataclass(frozen=True)
class AssumptionReport:
    """Sign conditions for the stability analysis, evaluated at one strain.

    ``raw`` maps each tested quantity to its value; the booleans are exactly
    the signs of those values (a report is a pure function of (p, F)).
    """

    F: float
    a1_holds: bool
    a2_holds: bool
    a3_holds: bool
    raw: dict


def morse_pair(alpha: float) -> ScalarFunctionC2:
    """Morse pair interaction with well at r = 1 and stiffness alpha."""

    def f(r: float) -> float:
        return math.exp(-2 * alpha * (r - 1)) - 2 * math.exp(-alpha * (r - 1))

    def f1(r: float) -> float:
        return -2 * alpha * math.exp(-2 * alpha * (r - 1)) + 2 * alpha * math.exp(
            -alpha * (r - 1)
        )

    def f2(r: float) -> float:
        return 4 * alpha**2 * math.exp(-2 * alpha * (r - 1)) - 2 * alpha**2 * math.exp(
            -alpha * (r - 1)
        )

    return ScalarFunctionC2(f, f1, f2, f"morse(alpha={alpha:g})")


def expdecay_density(beta: float) -> ScalarFunctionC2:
    """Exponentially decaying electron density, normalized to 1 at r = 1."""

    def f(r: float) -> float:
        return math.exp(-beta * (r - 1))

    def f1(r: float) -> float:
        return -beta * math.exp(-beta * (r - 1))

    def f2(r: float) -> float:
        return beta**2 * math.exp(-beta * (r - 1))

    return ScalarFunctionC2(f, f1, f2, f"expdecay(beta={beta:g})")


def quadratic_embedding(c0: float, c1: float) -> ScalarFunctionC2:
    """Embedding energy G(d) = c0/2 d^2 - c1 d; G'' = c0 everywhere."""

    def f(d: float) -> float:
        return 0.5 * c0 * d * d - c1 * d

    def f1(d: float) -> float:
        return c0 * d - c1

    def f2(d: float) -> float:
        return c0

    return ScalarFunctionC2(f, f1, f2, f"quadratic(c0={c0:g}, c1={c1:g})")


def zero_function() -> ScalarFunctionC2:
    """Identically zero member (e.g. no embedding term)."""
    zero = lambda r: 0.0  # noqa: E731
    return ScalarFunctionC2(zero, zero, zero, "zero")


def mean_field_density(p: EAMPotential, F: float) -> float:
    """Summed electron density 2 rho(F) + 2 rho(2F) at uniform strain F."""
    return 2.0 * p.density(F) + 2.0 * p.density(2 * F)


def check_assumptions(p: EAMPotential, F: float) -> AssumptionReport:
    """Evaluate the a1 / a2 / a3 sign conditions at strain F.

    a1 collects the curvature signs of the three functions at F and 2F; a2
    is nonnegativity of the stability coefficient B_F (tested as -B_F <= 0);
    a3 is the strict inequality under which the local model out-stabilizes
    the atomistic chain (and which is incompatible with a2).
    """
    if not F > 0:
        raise ValueError(f"strain must be positive, got F={F}")
    dbar = mean_field_density(p, F)
    phi2_F = p.pair.d2(F)
    phi2_2F = p.pair.d2(2 * F)
    rho1_F = p.density.d1(F)
    rho1_2F = p.density.d1(2 * F)
    rho2_F = p.density.d2(F)
    rho2_2F = p.density.d2(2 * F)
    g1 = p.embedding.d1(dbar)
    g2 = p.embedding.d2(dbar)

    neg_b = (
        phi2_2F
        + g2 * (rho1_F**2 + 20 * rho1_2F**2 + 12 * rho1_F * rho1_2F)
        + 2 * g1 * rho2_2F
    )
    a3_value = phi2_2F + g2 * (rho1_F + 2 * rho1_2F) ** 2 + 2 * g1 * rho2_2F

    raw = {
        "phi_dd_F": phi2_F,
        "phi_dd_2F": phi2_2F,
        "rho_d_F": rho1_F,
        "rho_d_2F": rho1_2F,
        "rho_dd_F": rho2_F,
        "rho_dd_2F": rho2_2F,
        "G_d": g1,
        "G_dd": g2,
        "minus_B": neg_b,
        "a3_lhs": a3_value,
    }
    a1 = (
        phi2_F > 0
        and phi2_2F < 0
        and rho1_F <= 0
        and rho1_2F <= 0
        and rho2_F >= 0
        and rho2_2F >= 0
        and g2 >= 0
    )
    return AssumptionReport(
        F=F,
        a1_holds=bool(a1),
        a2_holds=bool(neg_b <= 0),
        a3_holds=bool(a3_value > 0),
        raw=raw,
    )


def validate_derivatives(
    p: EAMPotential, probe: np.ndarray, h: float = 1e-5, tol: float = 1e-6
):
    """Check the analytic derivatives against central differences.

    Returns (passed, max_rel) where max_rel is the largest relative
    deviation between the analytic d1/d2 and central differences of eval/d1
    over the probe values (embedding functions probed at the corresponding
    summed densities).  Deviations are measured against the pointwise
    finite difference, floored by a fraction of its magnitude over the
    whole probe so isolated derivative roots (e.g. a pair-potential well
    bottom) do not amplify truncation noise.
    """
    probe = np.asarray(probe, dtype=float)
    worst = 0.0

    def _pair_dev(fn_lo, fn_hi, points):
        fds = np.array([(fn_lo(r + h) - fn_lo(r - h)) / (2 * h) for r in points])
        ans = np.array([fn_hi(r) for r in points])
        floor = max(1e-3 * float(np.max(np.abs(fds))), 1e-12)
        denom = np.maximum(np.abs(fds), floor)
        return float(np.max(np.abs(ans - fds) / denom))

    for fn in (p.pair, p.density):
        worst = max(worst, _pair_dev(fn.eval, fn.d1, probe), _pair_dev(fn.d1, fn.d2, probe))
    dens_probe = np.array([2 * p.density(r) + 2 * p.density(2 * r) for r in probe])
    worst = max(
        worst,
        _pair_dev(p.embedding.eval, p.embedding.d1, dens_probe),
        _pair_dev(p.embedding.d1, p.embedding.d2, dens_probe),
    )
    return worst <= tol, worst


def parse_potential(text: str, origin: str = "<string>") -> EAMPotential:
    """Parse a potential definition from key = value text.

    Recognized keys: name, family.pair, family.density, family.embedding,
    alpha, beta, c0, c1.  Unknown keys are a hard error (with line number).
    """
    entries = parse_kv_lines(text, origin)
    seen: dict[str, str] = {}
    for lineno, key, value in entries:
        if key not in POTENTIAL_KEYS:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        seen[key] = value

    def _num(key: str) -> float:
        if key not in seen:
            raise ConfigError(f"{origin}: missing numeric parameter {key!r}")
        try:
            return float(seen[key])
        except ValueError as exc:
            raise ConfigError(f"{origin}: bad number for {key!r}: {seen[key]!r}") from exc

    fam_pair = seen.get("family.pair", "zero")
    fam_density = seen.get("family.density", "zero")
    fam_embedding = seen.get("family.embedding", "zero")

    if fam_pair == "morse":
        pair = morse_pair(_num("alpha"))
    elif fam_pair == "zero":
        pair = zero_function()
    else:
        raise ConfigError(f"{origin}: unknown pair family {fam_pair!r}")

    if fam_density == "expdecay":
        density = expdecay_density(_num("beta"))
    elif fam_density == "zero":
        density = zero_function()
    else:
        raise ConfigError(f"{origin}: unknown density family {fam_density!r}")

    if fam_embedding == "quadratic":
        embedding = quadratic_embedding(_num("c0"), _num("c1"))
    elif fam_embedding == "zero":
        embedding = zero_function()
    else:
        raise ConfigError(f"{origin}: unknown embedding family {fam_embedding!r}")

    return EAMPotential(pair, density, embedding, name=seen.get("name", ""))


def load_potential_file(path) -> EAMPotential:
    """Load a potential definition from a UTF-8 key = value file."""
    path = Path(path)
    return parse_potential(path.read_text(encoding="utf-8"), origin=str(path))


def shipped_potential(name: str) -> EAMPotential:
    """Load one of the potentials shipped with the package.

    Known names: "default-eam" (tuned so a1 and a2 hold on the documented
    range), "reversal-eam" (violates a2 but satisfies a3, the regime where
    the local model is the more stable one), "pair-morse" (no embedding).
    """
    fname = name.replace("-", "_") + ".pot"
    ref = resources.files("eamchain").joinpath("data", fname)
    if not ref.is_file():
        raise ValueError(f"no shipped potential named {name!r}")
    return parse_potential(ref.read_text(encoding="utf-8"), origin=fname)
