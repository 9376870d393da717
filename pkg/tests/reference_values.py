"""Published values used as reproduction targets.

ANALYTIC_POWER[(zeta0, zeta1)][gamma] = ((submax, oracle, pooled) for L=1, same for L=5),
with I_bar = 1008 and 63 pairs per group respectively.

SIMULATED_COUNTS[(zeta0, zeta1)][gamma] = (submax, oracle, pooled) counts out of 10,000
for L=1 followed by the same for L=5.  The CART column is omitted.
"""

DESIGNS = ((1, 1008), (5, 63))

ANALYTIC_POWER = {
    (0.0, 0.0): {
        1.0: ((0.050, 0.050, 0.050), (0.050, 0.050, 0.050)),
        1.01: ((0.035, 0.033, 0.033), (0.035, 0.033, 0.033)),
        1.1: ((0.000, 0.000, 0.000), (0.000, 0.000, 0.000)),
        1.3: ((0.000, 0.000, 0.000), (0.000, 0.000, 0.000)),
    },
    (0.5, 0.5): {
        1.0: ((1.0, 1.0, 1.0), (1.0, 1.0, 1.0)),
        2.8: ((0.579, 0.671, 0.671), (0.460, 0.601, 0.601)),
        3.0: ((0.177, 0.218, 0.218), (0.126, 0.167, 0.167)),
        3.2: ((0.030, 0.030, 0.030), (0.020, 0.019, 0.019)),
        3.4: ((0.004, 0.002, 0.002), (0.002, 0.001, 0.001)),
    },
    (0.6, 0.4): {
        1.0: ((1.0, 1.0, 1.0), (1.0, 1.0, 1.0)),
        2.8: ((0.991, 0.998, 0.593), (0.959, 0.996, 0.521)),
        3.0: ((0.928, 0.971, 0.161), (0.791, 0.959, 0.121)),
        3.2: ((0.733, 0.855, 0.018), (0.492, 0.816, 0.011)),
        3.4: ((0.446, 0.615, 0.001), (0.220, 0.554, 0.001)),
    },
}

_ALL = (10000,) * 6
SIMULATED_COUNTS = {
    (0.0, 0.0): {
        1.0: (540, 525, 525, 515, 503, 503),
        1.1: (7, 1, 1, 7, 7, 7),
    },
    (0.5, 0.5): {
        1.0: _ALL,
        2.8: (5804, 6713, 6713, 4581, 6014, 6014),
        3.0: (1643, 2101, 2101, 1215, 1681, 1681),
    },
    (0.55, 0.45): {
        1.0: _ALL,
        2.8: (8263, 9035, 6541, 6729, 8769, 5814),
        3.0: (5011, 6549, 2030, 2900, 6035, 1520),
        3.2: (1980, 3412, 215, 795, 2927, 166),
        3.4: (521, 1190, 20, 166, 976, 7),
    },
    (0.6, 0.4): {
        1.0: _ALL,
        2.8: (9913, 9977, 6058, 9589, 9955, 5348),
        3.0: (9264, 9701, 1657, 7975, 9588, 1242),
        3.2: (7387, 8565, 173, 5071, 8208, 121),
        3.4: (4603, 6265, 6, 2245, 5679, 8),
    },
    (0.65, 0.35): {
        1.0: _ALL,
        3.0: (9978, 9992, 968, 9862, 9996, 729),
        3.3: (9524, 9811, 17, 8492, 9758, 6),
        3.6: (7283, 8470, 0, 4857, 8086, 0),
        3.9: (3564, 5329, 0, 1594, 4659, 0),
    },
}
