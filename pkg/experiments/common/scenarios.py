"""
Parameter grid of the fixed-domain simulation study and its published results.

Two scenarios, both on n points drawn uniformly in [0, 1]:

  * scenario 1: sigma_01^2 = sigma_02^2 = 1 known (pinned), (rho, theta)
    estimated, n in {200, 500}. Judged on the standardized rho and theta.
  * scenario 2: sigma_0k^2 = 0.5, all four parameters estimated,
    n in {500, 1000}. Judged on the microergodic sigma_k^2 theta and rho.

theta_0 is given through the practical range x (theta_0 = 3 / x), with
x in {0.2, 0.4, 0.6} and rho_0 in {0, 0.2, 0.5}.

REFERENCE_TABLES holds the published quantiles (5/25/50/75/95 %) and variances
so the runners can print simulated-vs-published comparisons. Values are copied
as printed, including the scenario-1 theta table whose variance column is on a
different scale from var(theta_hat); only its quantiles are compared.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from bivou.core import Params

PRACTICAL_RANGES: Tuple[float, ...] = (0.2, 0.4, 0.6)
RHO_VALUES: Tuple[float, ...] = (0.0, 0.2, 0.5)
M_REPLICATIONS = 1000

SCENARIO_SETTINGS: Dict[str, Dict] = {
    "scenario1": {"estimator": "theta_rho", "sigma_sq": 1.0, "ns": (200, 500)},
    "scenario2": {"estimator": "full", "sigma_sq": 0.5, "ns": (500, 1000)},
}


@dataclass(frozen=True)
class ReferenceTable:
    name: str
    scenario: str           # scenario1 / scenario2
    statistic: str          # label of the standardized coordinate
    caption: str
    compare_variance: bool
    # (n, practical_range, rho0) -> (q05, q25, q50, q75, q95, var)
    rows: Dict[Tuple[int, float, float], Tuple[float, ...]]

    @property
    def estimator(self) -> str:
        return SCENARIO_SETTINGS[self.scenario]["estimator"]

    def lookup(self, n: int, practical_range: float, rho0: float) -> Optional[Tuple[float, ...]]:
        return self.rows.get((n, round(practical_range, 6), round(rho0, 6)))


def psi0_for(scenario: str, practical_range: float, rho0: float) -> Params:
    s = SCENARIO_SETTINGS[scenario]["sigma_sq"]
    return Params.from_practical_range(s, s, rho0, practical_range)


def grid_points(scenario: str) -> List[Tuple[int, float, float]]:
    """Every (n, x, rho0) combination of a scenario in table order."""
    return [
        (n, x, rho)
        for x in PRACTICAL_RANGES
        for rho in RHO_VALUES
        for n in SCENARIO_SETTINGS[scenario]["ns"]
    ]


def _rows(data: List[Tuple]) -> Dict[Tuple[int, float, float], Tuple[float, ...]]:
    return {(int(r[0]), float(r[1]), float(r[2])): tuple(float(v) for v in r[3:]) for r in data}


# ===========================================================================
# Published tables
# ===========================================================================
TABLE1 = ReferenceTable(
    name="table1", scenario="scenario1", statistic="rho", compare_variance=True,
    caption="scenario 1, standardized rho_hat",
    rows=_rows([
        (200, 0.2, 0.0, -1.6070, -0.6521, -0.0335, 0.6812, 1.7225, 0.0051),
        (500, 0.2, 0.0, -1.6416, -0.6255, 0.0022, 0.6675, 1.6499, 0.0019),
        (200, 0.2, 0.2, -1.6755, -0.6749, -0.0161, 0.7149, 1.6455, 0.0048),
        (500, 0.2, 0.2, -1.6336, -0.6786, -0.0113, 0.6712, 1.6361, 0.0018),
        (200, 0.2, 0.5, -1.7768, -0.6809, -0.0232, 0.6583, 1.6119, 0.0030),
        (500, 0.2, 0.5, -1.6586, -0.6490, 0.0146, 0.6321, 1.6709, 0.0011),
        (200, 0.4, 0.0, -1.6185, -0.6531, -0.0292, 0.6852, 1.7259, 0.0051),
        (500, 0.4, 0.0, -1.6454, -0.6248, -0.0029, 0.6616, 1.6457, 0.0019),
        (200, 0.4, 0.2, -1.6781, -0.6688, -0.0031, 0.7142, 1.6576, 0.0048),
        (500, 0.4, 0.2, -1.6291, -0.6750, -0.0059, 0.6755, 1.6629, 0.0018),
        (200, 0.4, 0.5, -1.7716, -0.6874, -0.0282, 0.6580, 1.6226, 0.0030),
        (500, 0.4, 0.5, -1.6436, -0.6534, 0.0082, 0.6270, 1.6788, 0.0011),
        (200, 0.6, 0.0, -1.6179, -0.6554, -0.0288, 0.6845, 1.7200, 0.0051),
        (500, 0.6, 0.0, -1.6487, -0.6466, -0.0019, 0.6645, 1.6513, 0.0019),
        (200, 0.6, 0.2, -1.6908, -0.6694, -0.0088, 0.7120, 1.6681, 0.0048),
        (500, 0.6, 0.2, -1.6286, -0.6767, -0.0111, 0.6704, 1.6608, 0.0018),
        (200, 0.6, 0.5, -1.7810, -0.6950, -0.0354, 0.6642, 1.6121, 0.0030),
        (500, 0.6, 0.5, -1.6407, -0.6537, 0.0073, 0.6255, 1.6686, 0.0011),
    ]),
)

TABLE2 = ReferenceTable(
    name="table2", scenario="scenario1", statistic="theta", compare_variance=False,
    caption="scenario 1, standardized theta_hat",
    rows=_rows([
        (200, 0.2, 0.0, -1.6567, -0.7382, -0.0978, 0.6805, 1.7761, 2.50e-05),
        (500, 0.2, 0.0, -1.6838, -0.7447, -0.0469, 0.6684, 1.6369, 9.23e-06),
        (200, 0.2, 0.2, -1.6176, -0.7432, -0.0651, 0.6583, 1.8583, 2.61e-05),
        (500, 0.2, 0.2, -1.6962, -0.7370, -0.0260, 0.6533, 1.6414, 9.61e-06),
        (200, 0.2, 0.5, -1.6032, -0.7028, -0.0725, 0.6689, 1.8607, 3.12e-05),
        (500, 0.2, 0.5, -1.6530, -0.7169, -0.0600, 0.6758, 1.6320, 1.13e-05),
        (200, 0.4, 0.0, -1.5910, -0.7551, -0.0907, 0.6715, 1.8092, 9.68e-05),
        (500, 0.4, 0.0, -1.6852, -0.7522, -0.0367, 0.6661, 1.6850, 3.64e-05),
        (200, 0.4, 0.2, -1.6073, -0.7242, -0.0731, 0.6261, 1.7977, 1.01e-04),
        (500, 0.4, 0.2, -1.6841, -0.7469, -0.0217, 0.6649, 1.6060, 3.79e-05),
        (200, 0.4, 0.5, -1.5561, -0.6992, -0.0599, 0.6578, 1.8200, 1.02e-04),
        (500, 0.4, 0.5, -1.6410, -0.7191, -0.0577, 0.6772, 1.6024, 4.48e-05),
        (200, 0.6, 0.0, -1.5563, -0.7307, -0.0847, 0.6711, 1.8093, 2.15e-04),
        (500, 0.6, 0.0, -1.6737, -0.7421, -0.0352, 0.6635, 1.6752, 8.16e-05),
        (200, 0.6, 0.2, -1.5693, -0.7187, -0.0694, 0.6130, 1.8244, 2.01e-04),
        (500, 0.6, 0.2, -1.6821, -0.7473, -0.0373, 0.6579, 1.6315, 8.49e-05),
        (200, 0.6, 0.5, -1.5666, -0.6765, -0.0638, 0.6659, 1.8175, 2.05e-04),
        (500, 0.6, 0.5, -1.6373, -0.7232, -0.0566, 0.6669, 1.6208, 1.03e-04),
    ]),
)

TABLE3 = ReferenceTable(
    name="table3", scenario="scenario2", statistic="sigma1_sq_theta", compare_variance=True,
    caption="scenario 2, standardized sigma1^2 theta",
    rows=_rows([
        (500, 0.2, 0.0, -1.4333, -0.5971, 0.0547, 0.7163, 1.7152, 0.2100),
        (1000, 0.2, 0.0, -1.6085, -0.6291, 0.0338, 0.7331, 1.65266, 0.1102),
        (500, 0.2, 0.2, -1.4331, -0.5964, 0.0535, 0.7160, 1.7142, 0.2106),
        (1000, 0.2, 0.2, -1.6022, -0.6257, 0.0356, 0.7348, 1.6526, 0.1095),
        (500, 0.2, 0.5, -1.4333, -0.5945, 0.0520, 0.7163, 1.7151, 0.2098),
        (1000, 0.2, 0.5, -1.6115, -0.6327, 0.0336, 0.7339, 1.6501, 0.1110),
        (500, 0.4, 0.0, -1.4277, -0.5827, 0.0427, 0.6999, 1.6847, 0.0519),
        (1000, 0.4, 0.0, -1.6158, -0.6364, 0.0370, 0.7277, 1.6263, 0.0275),
        (500, 0.4, 0.2, -1.4276, -0.5799, 0.0427, 0.6999, 1.6844, 0.0518),
        (1000, 0.4, 0.2, -1.6109, -0.6299, 0.0459, 0.7412, 1.6357, 0.0276),
        (500, 0.4, 0.5, -1.4276, -0.5827, 0.0387, 0.6938, 1.6842, 0.0517),
        (1000, 0.4, 0.5, -1.6090, -0.6275, 0.0380, 0.7402, 1.6346, 0.0275),
        (500, 0.6, 0.0, -1.4229, -0.5847, 0.0406, 0.6995, 1.6997, 0.0228),
        (1000, 0.6, 0.0, -1.6241, -0.6314, 0.0393, 0.7411, 1.6377, 0.0123),
        (500, 0.6, 0.2, -1.4235, -0.5833, 0.0433, 0.7090, 1.6999, 0.0228),
        (1000, 0.6, 0.2, -1.6234, -0.6318, 0.0343, 0.7377, 1.6365, 0.0123),
        (500, 0.6, 0.5, -1.4235, -0.5833, 0.0433, 0.7090, 1.6999, 0.0228),
        (1000, 0.6, 0.5, -1.6234, -0.6318, 0.0343, 0.7377, 1.6365, 0.0123),
    ]),
)

TABLE4 = ReferenceTable(
    name="table4", scenario="scenario2", statistic="sigma2_sq_theta", compare_variance=True,
    caption="scenario 2, standardized sigma2^2 theta",
    rows=_rows([
        (500, 0.2, 0.0, -1.5318, -0.6282, 0.0544, 0.7382, 1.8544, 0.2336),
        (1000, 0.2, 0.0, -1.5134, -0.6382, 0.0628, 0.7003, 1.7527, 0.1150),
        (500, 0.2, 0.2, -1.5067, -0.6272, 0.0411, 0.7359, 1.7854, 0.2364),
        (1000, 0.2, 0.2, -1.4653, -0.6415, 0.0728, 0.7239, 1.7743, 0.1155),
        (500, 0.2, 0.5, -1.4734, -0.6078, 0.0308, 0.7732, 1.8493, 0.2336),
        (1000, 0.2, 0.5, -1.4260, -0.6438, 0.0192, 0.7809, 1.7520, 0.1149),
        (500, 0.4, 0.0, -1.5173, -0.6479, 0.0598, 0.7225, 1.8452, 0.0578),
        (1000, 0.4, 0.0, -1.5014, -0.6395, 0.0604, 0.6989, 1.7377, 0.0287),
        (500, 0.4, 0.2, -1.5164, -0.6275, 0.0553, 0.7537, 1.7436, 0.0580),
        (1000, 0.4, 0.2, -1.4724, -0.6442, 0.0494, 0.7260, 1.7822, 0.0288),
        (500, 0.4, 0.5, -1.4877, -0.6099, 0.0252, 0.7725, 1.7729, 0.0581),
        (1000, 0.4, 0.5, -1.4488, -0.6495, 0.0117, 0.7565, 1.7381, 0.0287),
        (500, 0.6, 0.0, -1.5448, -0.6447, 0.0705, 0.7226, 1.8264, 0.0257),
        (1000, 0.6, 0.0, -1.4940, -0.6560, 0.0548, 0.7055, 1.7365, 0.0128),
        (500, 0.6, 0.2, -1.5122, -0.6379, 0.0668, 0.7553, 1.7310, 0.0257),
        (1000, 0.6, 0.2, -1.4466, -0.6450, 0.0541, 0.7316, 1.7923, 0.0128),
        (500, 0.6, 0.5, -1.4768, -0.6128, 0.0325, 0.7605, 1.7396, 0.0258),
        (1000, 0.6, 0.5, -1.4464, -0.6549, -0.0115, 0.7551, 1.7464, 0.0128),
    ]),
)

TABLE5 = ReferenceTable(
    name="table5", scenario="scenario2", statistic="rho", compare_variance=True,
    caption="scenario 2, standardized rho_hat",
    rows=_rows([
        (500, 0.2, 0.0, -1.6477, -0.6271, 0.0016, 0.6795, 1.6786, 0.0019),
        (1000, 0.2, 0.0, -1.7235, -0.6167, 0.0516, 0.6975, 1.7051, 0.0010),
        (500, 0.2, 0.2, -1.6431, -0.6714, 0.0037, 0.6518, 1.6418, 0.0018),
        (1000, 0.2, 0.2, -1.6620, -0.5992, 0.0460, 0.6906, 1.6757, 0.0009),
        (500, 0.2, 0.5, -1.6193, -0.6434, 0.0123, 0.6220, 1.6585, 0.0011),
        (1000, 0.2, 0.5, -1.6582, -0.6445, 0.0563, 0.6729, 1.5996, 0.0005),
        (500, 0.4, 0.0, -1.6486, -0.6283, -0.0091, 0.6684, 1.6600, 0.0019),
        (1000, 0.4, 0.0, -1.7296, -0.6209, 0.0365, 0.6967, 1.7151, 0.0010),
        (500, 0.4, 0.2, -1.6407, -0.6589, -0.0074, 0.6509, 1.6631, 0.0018),
        (1000, 0.4, 0.2, -1.6840, -0.6067, 0.0253, 0.6845, 1.6823, 0.0009),
        (500, 0.4, 0.5, -1.6160, -0.6529, -0.0045, 0.5987, 1.6543, 0.0010),
        (1000, 0.4, 0.5, -1.6669, -0.6434, 0.0577, 0.6734, 1.6171, 0.0005),
        (500, 0.6, 0.0, -1.6504, -0.6280, -0.0092, 0.6890, 1.6550, 0.0019),
        (1000, 0.6, 0.0, -1.7330, -0.6214, 0.0370, 0.6931, 1.7297, 0.0010),
        (500, 0.6, 0.2, -1.6412, -0.6525, 0.0050, 0.6653, 1.6603, 0.0018),
        (1000, 0.6, 0.2, -1.7102, -0.6111, 0.0201, 0.6738, 1.6908, 0.0009),
        (500, 0.6, 0.5, -1.6536, -0.6510, 0.0070, 0.6169, 1.6561, 0.0011),
        (1000, 0.6, 0.5, -1.6776, -0.6496, 0.0617, 0.6714, 1.6175, 0.0005),
    ]),
)

REFERENCE_TABLES: Dict[str, ReferenceTable] = {
    t.name: t for t in (TABLE1, TABLE2, TABLE3, TABLE4, TABLE5)
}
