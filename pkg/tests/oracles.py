"""Independent reference evaluations in extended precision.

The curves here are typed in exactly as printed, with no numerical
rewriting, and evaluated with mpmath at enough working precision to absorb
their cancellations.  Nothing here imports the package under test.
"""

import mpmath as mp

E = mp.exp
PI = mp.pi


def _dps_for(x):
    # the jacobian numerator is O(xi^9): keep ~10 extra digits per decade
    x = abs(mp.mpf(x))
    extra = 0 if x == 0 or x > 1 else int(10 * -mp.log10(x))
    return 40 + extra


def jacobian(x):
    x = mp.mpf(x)
    if x == 0:
        x = mp.mpf("1e-40")
    with mp.workdps(_dps_for(x)):
        r = 64 * mp.csch(x) ** 9 * (
            -160 * mp.sinh(2 * x) - 25 * mp.sinh(4 * x) + 12 * x * (16 * mp.cosh(2 * x) + mp.cosh(4 * x) + 18)
        ) / (27 * mp.pi**2)
    return +r


def _two_sided(pos, neg):
    def f(x):
        x = mp.mpf(x)
        with mp.workdps(60):
            return +(pos(x) if x > 0 else neg(x))
    return f


dominant = _two_sided(
    lambda x: E(-3 * x) * (3 * E(2 * x) - 1) / 2,
    lambda x: -E(x) * (E(2 * x) - 3) / 2,
)
intermediate = _two_sided(
    lambda x: 9 * PI**2 / 2048 * E(-3 * x) * (27 * E(2 * x) - 7),
    lambda x: -9 * PI**2 / 2048 * E(x) * (7 * E(2 * x) - 27),
)
s3x3 = _two_sided(
    lambda x: 9 * PI**2 * E(-3 * x) * (27 * E(2 * x) - 7) / 2048,
    lambda x: 3 * PI * E(-3 * x) * (
        E(x) * mp.sqrt(1 - E(2 * x)) * (37 * E(2 * x) + 2 * E(4 * x) + 21)
        + 3 * (27 * E(2 * x) - 7) * mp.asin(E(x))
    ) / 1024,
)
s2x2 = _two_sided(
    lambda x: E(-2 * x) * (2 * mp.sinh(x) + mp.cosh(x)),
    lambda x: mp.mpf(1),
)
conjecture = _two_sided(
    lambda x: 315 * E(-3 * x) * (-5 + 18 * E(2 * x)) * PI**2 / 2**16,
    lambda x: -315 * E(x) * (-18 + 5 * E(2 * x)) * PI**2 / 2**16,
)
previous_conjecture = _two_sided(
    lambda x: 135 * E(-3 * x) * (-1 + 3 * E(2 * x)) * PI**2 / (2**8 * 17),
    lambda x: -135 * E(x) * (-3 + E(2 * x)) * PI**2 / (2**8 * 17),
)
scenario_complex_pair = _two_sided(
    lambda x: E(-4 * x) * (-1 + 4 * E(2 * x)) / 3,
    lambda x: -E(2 * x) * (-4 + E(2 * x)) / 3,
)
paired_dominant = _two_sided(
    lambda x: -PI * E(-6 * x) * (
        mp.sqrt(E(2 * x) - 1) * (1696 * E(2 * x) - 7665 * E(4 * x) - 5346 * E(6 * x) + 188)
        + 3 * E(4 * x) * (-7273 * E(2 * x) + 1782 * E(4 * x) + 1782) * mp.acsc(E(x))
    ) / 71680,
    lambda x: -PI * E(-2 * x) * (
        E(x) * mp.sqrt(1 - E(2 * x)) * (-7665 * E(2 * x) + 1696 * E(4 * x) + 188 * E(6 * x) - 5346)
        + 3 * (-7273 * E(2 * x) + 1782 * E(4 * x) + 1782) * mp.asin(E(x))
    ) / 71680,
)
paired_intermediate = _two_sided(
    lambda x: 3 * PI**2 * E(-3 * x) * (18873 * E(2 * x) - 4037) / 573440,
    lambda x: 3 * PI**2 * E(x) * (18873 - 4037 * E(2 * x)) / 573440,
)
# printed as the two greater branches of the (1,4)/(2,3) pairings
paired_greater = _two_sided(
    lambda x: -3 * PI**2 * E(-6 * x) * (3 * E(2 * x) * (91 * E(2 * x) * (9 - 65 * E(2 * x)) + 144) + 20) / 573440,
    lambda x: -3 * PI**2 * (2457 * E(2 * x) + 432 * E(4 * x) + 20 * E(6 * x) - 17745) / 573440,
)

PRINTED = {
    "dominant": dominant,
    "intermediate": intermediate,
    "s3x3": s3x3,
    "s2x2": s2x2,
    "conjecture": conjecture,
    "previous_conjecture": previous_conjecture,
    "scenario_complex_pair": scenario_complex_pair,
    "paired_dominant": paired_dominant,
    "paired_intermediate": paired_intermediate,
    "paired_greater": paired_greater,
}


def probability(curve, jac=jacobian, breakpoints=(-40, -8, -2, 0, 2, 8, 40)):
    """High-precision integral of curve * jacobian."""
    with mp.workdps(30):
        return mp.quad(lambda x: curve(x) * jac(x), list(breakpoints))


# exact targets, evaluated at 40 digits
with mp.workdps(40):
    TARGETS = {
        "dominant": 1024 / (135 * PI**2),
        "intermediate": mp.mpf(22) / 35,
        "paired_intermediate": mp.mpf(1129) / 2100,
        "conjecture": mp.mpf(29) / 64,
        "previous_conjecture": mp.mpf(8) / 17,
        "paired_greater": mp.mpf(7724) / 525 - 5751 * PI**2 / 4096,
        "paired_product": PI**2 * (18031791 * PI**2 - 177044420) / (2**14 * 5**2 * 7**2),
        "absolute": (6928 - 2205 * PI) / mp.mpf(2) ** mp.mpf(4.5),
    }
