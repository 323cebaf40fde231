"""Published reference values used to annotate study reports.

Keys use the nominal horizon as a fraction of the plate length.
"""

from __future__ import annotations

ALPHAS = (1.0, 0.9, 0.8, 0.7)
LF_FRACS = (0.2, 0.3, 0.4, 0.5)

# Exact center value 100*w of the manufactured field x(x-1)y(y-1).
MMS_EXACT_W100 = 6.25
# Reported 100*w at the center for the manufactured-solution runs.
MMS_REPORTED_W100 = {(1.0, None): 6.26, (0.9, 0.1): 6.06, (0.9, 0.2): 6.50, (0.8, 0.1): 6.19, (0.8, 0.2): 6.26}


def _grid(rows):
    return {(a, lf): v for lf, vals in rows.items() for a, v in zip(ALPHAS, vals)}


# Static center deflection, (theory, bc) -> {(alpha, lf): w_bar}.
STATIC = {
    ("mindlin", "CCCC"): _grid({
        0.2: (1.6071, 1.8480, 2.0445, 2.2400),
        0.3: (1.6071, 1.9554, 2.2787, 2.5372),
        0.4: (1.6071, 2.1118, 2.7252, 3.4427),
        0.5: (1.6071, 2.2835, 3.3362, 5.0887),
    }),
    ("mindlin", "SSSS"): _grid({
        0.2: (4.6401, 5.1533, 5.5759, 5.9310),
        0.3: (4.6401, 5.3579, 6.0026, 6.5009),
        0.4: (4.6401, 5.6047, 6.6445, 7.6796),
        0.5: (4.6401, 5.9198, 7.6192, 9.9868),
    }),
    ("kirchhoff", "CCCC"): _grid({
        0.2: (1.4235, 1.5135, 1.5929, 1.6709),
        0.3: (1.4235, 1.6047, 1.7772, 1.9380),
        0.4: (1.4235, 1.6982, 2.0135, 2.3790),
        0.5: (1.4235, 1.8047, 2.2878, 2.9446),
    }),
    ("kirchhoff", "SSSS"): _grid({
        0.2: (4.5701, 4.6151, 4.6419, 4.6610),
        0.3: (4.5701, 4.7068, 4.8252, 4.8768),
        0.4: (4.5701, 4.8249, 5.0927, 5.3828),
        0.5: (4.5701, 4.9480, 5.4094, 6.0180),
    }),
}

# Fundamental frequency, (theory, bc) -> {(alpha, lf): omega_bar}.
FUNDAMENTAL = {
    ("mindlin", "CCCC"): _grid({
        0.2: (9.8540, 9.2083, 8.6610, 8.1801),
        0.3: (9.8540, 8.9162, 8.0603, 7.2857),
        0.4: (9.8540, 8.6172, 7.4342, 6.3439),
        0.5: (9.8540, 8.3622, 6.8856, 5.5204),
    }),
    ("mindlin", "SSSS"): _grid({
        0.2: (5.7788, 5.4588, 5.2210, 5.0368),
        0.3: (5.7788, 5.3664, 5.0286, 4.7443),
        0.4: (5.7788, 5.2581, 4.7980, 4.3866),
        0.5: (5.7788, 5.1487, 4.5570, 3.9966),
    }),
    ("kirchhoff", "CCCC"): _grid({
        0.2: (3.6457, 3.5176, 3.4090, 3.3077),
        0.3: (3.6457, 3.4123, 3.2115, 3.0277),
        0.4: (3.6457, 3.3157, 3.0288, 2.7659),
        0.5: (3.6457, 3.2389, 2.8812, 2.5483),
    }),
    ("kirchhoff", "SSSS"): _grid({
        0.2: (1.9998, 1.9865, 1.9765, 1.9676),
        0.3: (1.9998, 1.9681, 1.9384, 1.9081),
        0.4: (1.9998, 1.9465, 1.8923, 1.8342),
        0.5: (1.9998, 1.9257, 1.8463, 1.7564),
    }),
}

_LOCAL_EIGHT = (9.8540, 18.8806, 26.4485, 31.3387, 31.6403, 37.8018, 46.4625, 47.7089)

# First eight distinct frequencies of the clamped Mindlin plate, {(alpha, lf): tuple}.
FIRST_EIGHT_MINDLIN_CCCC = {
    (0.7, 0.5): (5.5204, 7.8808, 10.1654, 11.9102, 12.0238, 13.9883, 17.2615, 17.3539),
    (0.8, 0.5): (6.8856, 10.9440, 14.7220, 16.8717, 17.0305, 20.2794, 24.7794, 25.2272),
    (0.9, 0.5): (8.3622, 14.6749, 20.2387, 23.4535, 23.6739, 28.3423, 34.6228, 35.5065),
    (0.8, 0.4): (7.4342, 11.7452, 15.8992, 16.8007, 16.9583, 20.6869, 24.3174, 25.0889),
    (0.8, 0.3): (8.0603, 13.3021, 18.3123, 18.4040, 18.5473, 23.2114, 24.2828, 27.8966),
    (0.8, 0.2): (8.6610, 15.2968, 21.3305, 22.4971, 22.6767, 28.1549, 29.2432, 34.3695),
}
for _lf in LF_FRACS:
    FIRST_EIGHT_MINDLIN_CCCC[(1.0, _lf)] = _LOCAL_EIGHT

# Clamped convergence study, theory -> {(lf, rate, alpha): w_bar}.
CONVERGENCE = {
    "mindlin": {},
    "kirchhoff": {},
}
_MINDLIN_CONV = {
    0.2: {4: (1.5645, 1.7214, 1.8549, 1.9793), 8: (1.6226, 1.8164, 1.9924, 2.1668),
          10: (1.6299, 1.8350, 2.0226, 2.2092), 12: (1.6339, 1.8480, 2.0445, 2.2400),
          16: (1.6379, 1.8659, 2.0753, 2.2832)},
    0.4: {4: (1.3715, 1.8071, 2.3811, 3.1851), 8: (1.5645, 2.0525, 2.6554, 3.3890),
          10: (1.5836, 2.0788, 2.6856, 3.4102), 12: (1.6071, 2.1118, 2.7252, 3.4427),
          16: (1.6226, 2.1384, 2.7611, 3.4776)},
    0.5: {4: (1.2578, 1.7969, 2.6313, 4.0621), 8: (1.5238, 2.1893, 3.2054, 4.9160),
          10: (1.5645, 2.2486, 3.2874, 5.0246), 12: (1.5876, 2.2835, 3.3362, 5.0887),
          16: (1.6113, 2.3227, 3.3935, 5.1657)},
}
_KIRCHHOFF_CONV = {
    0.2: {4: (1.4235, 1.5102, 1.5860, 1.6603), 8: (1.4235, 1.5129, 1.5916, 1.6689),
          10: (1.4235, 1.5135, 1.5929, 1.6709), 12: (1.4235, 1.5140, 1.5939, 1.6273)},
    0.4: {4: (1.4235, 1.7262, 2.0782, 2.5063), 8: (1.4235, 1.7102, 2.0320, 2.4078),
          10: (1.4235, 1.6982, 2.0135, 2.3790), 12: (1.4235, 1.7055, 2.0185, 2.3788)},
    0.5: {4: (1.4236, 1.8189, 2.3280, 3.0251), 8: (1.4325, 1.8072, 2.2952, 2.9598),
          10: (1.4235, 1.8047, 2.2878, 2.9446), 12: (1.4235, 1.8030, 2.2828, 2.9340)},
}
for _name, _table in (("mindlin", _MINDLIN_CONV), ("kirchhoff", _KIRCHHOFF_CONV)):
    for _lf, _rates in _table.items():
        for _rate, _vals in _rates.items():
            for _a, _v in zip(ALPHAS, _vals):
                CONVERGENCE[_name][(_lf, _rate, _a)] = _v


def lookup(table: dict, key):
    """Reference value or None."""
    return table.get(key)
