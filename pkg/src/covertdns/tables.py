"""Published reference measurements used to calibrate the simulator.

Domain-length statistics per dataset (1000 domains each), server-response
frame-size statistics per dataset and transport, and the AR(4) trend
coefficients reported for DoH traffic. Family labels are normalised
(``Conficker`` rather than the misspelling found in some sources).
"""

from __future__ import annotations

from typing import NamedTuple

FAMILIES: tuple[str, ...] = (
    "Alexa",
    "Conficker",
    "CryptoLocker",
    "Goz",
    "Matsnu",
    "NewGoz",
    "Pushdo",
    "Ramdo",
    "Rovnix",
    "Tinba",
    "Zeus",
)
DGA_FAMILIES: tuple[str, ...] = FAMILIES[1:]
BENIGN_FAMILY = "Alexa"


class RowStats(NamedTuple):
    min: int
    max: int
    average: float
    stdev: float
    unique_count: int


DOMAIN_LENGTHS: dict[str, RowStats] = {
    "Alexa": RowStats(4, 28, 11.349, 3.237, 22),
    "Conficker": RowStats(8, 16, 11.755, 1.983, 9),
    "CryptoLocker": RowStats(15, 21, 17.783, 1.424, 7),
    "Goz": RowStats(20, 35, 28.241, 2.431, 16),
    "Matsnu": RowStats(28, 40, 30.527, 2.038, 13),
    "NewGoz": RowStats(26, 32, 29.885, 1.087, 7),
    "Pushdo": RowStats(11, 11, 11.000, 0.000, 1),
    "Ramdo": RowStats(20, 20, 20.000, 0.000, 1),
    "Rovnix": RowStats(24, 38, 26.794, 2.622, 15),
    "Tinba": RowStats(16, 16, 16.000, 0.000, 1),
    "Zeus": RowStats(26, 32, 29.878, 1.038, 7),
}

# frame sizes in bytes; DoT rows exclude the constant 97-byte record
RESPONSE_SIZES: dict[tuple[str, str], RowStats] = {
    ("Alexa", "doh"): RowStats(476, 704, 541.610, 27.646, 109),
    ("Conficker", "doh"): RowStats(470, 599, 565.162, 20.612, 50),
    ("CryptoLocker", "doh"): RowStats(568, 592, 580.045, 6.586, 25),
    ("Goz", "doh"): RowStats(574, 594, 585.218, 3.710, 21),
    ("Matsnu", "doh"): RowStats(595, 611, 601.425, 3.617, 17),
    ("NewGoz", "doh"): RowStats(580, 605, 594.347, 6.797, 26),
    ("Pushdo", "doh"): RowStats(564, 570, 567.806, 2.890, 2),
    ("Ramdo", "doh"): RowStats(574, 580, 577.708, 2.915, 2),
    ("Rovnix", "doh"): RowStats(591, 610, 596.900, 3.979, 20),
    ("Tinba", "doh"): RowStats(521, 589, 585.445, 6.410, 6),
    ("Zeus", "doh"): RowStats(580, 605, 591.737, 6.414, 26),
    ("Alexa", "dot"): RowStats(134, 619, 220.951, 80.746, 235),
    ("Conficker", "dot"): RowStats(121, 354, 214.670, 58.580, 37),
    ("CryptoLocker", "dot"): RowStats(189, 205, 196.532, 5.484, 14),
    ("Goz", "dot"): RowStats(195, 209, 202.217, 2.484, 15),
    ("Matsnu", "dot"): RowStats(214, 224, 216.566, 2.046, 11),
    ("NewGoz", "dot"): RowStats(201, 218, 211.854, 5.281, 14),
    ("Pushdo", "dot"): RowStats(185, 185, 185.000, 0.000, 1),
    ("Ramdo", "dot"): RowStats(196, 196, 196.000, 0.000, 1),
    ("Rovnix", "dot"): RowStats(210, 223, 212.759, 2.684, 14),
    ("Tinba", "dot"): RowStats(145, 202, 201.483, 5.405, 2),
    ("Zeus", "dot"): RowStats(202, 218, 211.520, 5.245, 13),
}

DOT_LEAD_RECORD_SIZE = 97


class PublishedIoc(NamedTuple):
    constant: float
    lags: tuple[float, float, float, float]
    std_errors: tuple[float, float, float, float, float]


PUBLISHED_IOCS: dict[str, PublishedIoc] = {
    "Alexa": PublishedIoc(
        3.418966,
        (3.088595, -3.624877, 1.913501, -0.383532),
        (0.469880, 0.029306, 0.082269, 0.082175, 0.029205),
    ),
    "Conficker": PublishedIoc(
        2.785166,
        (3.107565, -3.657214, 1.920612, -0.3758890),
        (4.716197e-01, 0.029506, 0.083259, 8.340822e-02, 2.967494e-02),
    ),
    "CryptoLocker": PublishedIoc(
        2.843495,
        (2.880937, -3.301188, 1.851547, -4.361981e-01),
        (5.729647e-01, 0.028428, 0.075057, 7.451386e-02, 2.778673e-02),
    ),
    "Goz": PublishedIoc(
        3.497740,
        (3.104442, -3.665087, 1.944414, -3.897455e-01),
        (5.019608e-01, 0.029296, 0.082379, 8.240207e-02, 2.932082e-02),
    ),
    "Matsnu": PublishedIoc(
        3.111954,
        (3.152710, -3.77899, 2.032400, -4.112938e-01),
        (4.716860e-01, 0.028967, 0.08182, 8.174793e-02, 2.888826e-02),
    ),
    "NewGoz": PublishedIoc(
        2.243034,
        (3.168183, -3.822154, 2.070548, -4.203520e-01),
        (0.522166, 0.029030, 0.082280, 8.274406e-02, 2.957008e-02),
    ),
    "Pushdo": PublishedIoc(
        3.645356,
        (3.110475, -3.685589, 1.962390, -3.936961e-01),
        (5.041236e-01, 0.029258, 0.082007, 8.174939e-02, 2.896300e-02),
    ),
    "Ramdo": PublishedIoc(
        3.359594,
        (3.164252, -3.842610, 2.126389, -4.538455e-01),
        (4.817741e-01, 0.028482, 0.080164, 8.033351e-02, 2.865658e-02),
    ),
    "Rovnix": PublishedIoc(
        4.380914,
        (3.092777, -3.652384, 1.954086, -4.018180e-01),
        (5.473323e-01, 0.029101, 0.081594, 8.163828e-02, 2.914092e-02),
    ),
    "Tinba": PublishedIoc(
        0.878688,
        (3.380042, -4.351385, 2.533331, -5.634898e-01),
        (0.304202, 0.025792, 0.073868, 7.300452e-02, 2.479662e-02),
    ),
    "Zeus": PublishedIoc(
        6.110055,
        (2.773122, -3.025082, 1.637556, -3.959203e-01),
        (7.452222e-01, 0.029171, 0.076807, 7.675001e-02, 2.908530e-02),
    ),
}


class AnovaTable(NamedTuple):
    ss_between: float
    ss_within: float
    ss_total: float
    df_between: int
    df_within: int
    df_total: int
    ms_between: float
    ms_within: float
    f_stat: float


PUBLISHED_ANOVA = AnovaTable(
    2986937.080, 1419585.793, 4406522.873, 10, 10983, 10993, 298693.708, 129.253, 2310.923
)
