from typing import Dict, List

from schema import PresetName


class PresetRegistry:
    """Registry mapping presets to their descriptions and the artifacts they write"""

    _descriptions: Dict[PresetName, str] = {
        PresetName.SOLVE: "solve the obstacle problem; u, Au and coincidence fields plus a solve summary",
        PresetName.LS_AUDIT: "two-sided Lewy-Stampacchia bound f <= Au <= f + (A psi - f)^+ away from free-boundary collars",
        PresetName.EQUATION_AUDIT: "Au + beta = f with beta reconstructed from the coincidence set; entropy certificates",
        PresetName.CHAIN: "approximation chain T_n(f): convergence in measure and a-priori modular estimates",
        PresetName.CONTRACTION: "L1 contraction |xi1 - xi2|_1 <= |f1 - f2|_1 over seeded random data pairs",
        PresetName.STABILITY: "coincidence-set stability meas(I1 xor I2) <= |f1 - f2|_1 / lambda under non-degeneracy",
        PresetName.CHI_CONVERGENCE: "chi_{u_n = psi_n} -> chi_{u = psi} for psi_n = psi + bump / n",
        PresetName.EXPONENT_REPORT: "exponent bounds, log-Hoelder constant, derived exponents and regime flags",
        PresetName.STRUCTURE_AUDIT: "sampled coercivity, growth and monotonicity margins of the flux",
        PresetName.MANUFACTURED: "observed convergence order against a product-of-sines manufactured solution",
    }

    _artifacts: Dict[PresetName, List[str]] = {
        PresetName.SOLVE: ["u.field", "au.field", "coincidence.field", "solve.csv", "holder.csv", "solve_summary.txt"],
        PresetName.LS_AUDIT: ["ls_report.csv", "ls_summary.txt"],
        PresetName.EQUATION_AUDIT: ["equation_report.csv", "entropy.csv", "beta.field", "xi.field"],
        PresetName.CHAIN: ["chain.csv", "truncation_energy.csv"],
        PresetName.CONTRACTION: ["contraction.csv"],
        PresetName.STABILITY: ["stability.csv", "stability_summary.txt"],
        PresetName.CHI_CONVERGENCE: ["chi.csv"],
        PresetName.EXPONENT_REPORT: ["exponent.csv"],
        PresetName.STRUCTURE_AUDIT: ["structure.csv"],
        PresetName.MANUFACTURED: ["order.csv"],
    }

    @classmethod
    def presets(cls) -> List[PresetName]:
        return list(PresetName)

    @classmethod
    def describe(cls, preset: PresetName) -> str:
        return cls._descriptions[PresetName(preset)]

    @classmethod
    def get_artifacts(cls, preset: PresetName) -> List[str]:
        return list(cls._artifacts[PresetName(preset)])
