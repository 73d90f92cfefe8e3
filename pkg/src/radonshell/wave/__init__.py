"""Free waves from radiation profiles in d = 3, 5."""
from .operators import (PHI, CutoffPhi, StrichartzResult, double_cutoff_defect, modified_cutoff,
                        orthogonality_defect,
                        phi_mean, strichartz_exterior, strichartz_norm)
from .synthesis import (EnergyResult, RadiationProfile, RadiationTable, WaveEvaluation,
                        WaveSnapshot, as_radiation, energy_norm, exterior_energy,
                        radiation_convergence, synthesize_wave, wave_grid, wave_residual,
                        wave_snapshot)

__all__ = ["PHI", "CutoffPhi", "double_cutoff_defect", "StrichartzResult", "modified_cutoff", "orthogonality_defect",
           "phi_mean", "strichartz_exterior", "strichartz_norm", "EnergyResult",
           "RadiationProfile", "RadiationTable", "WaveEvaluation", "WaveSnapshot", "as_radiation",
           "energy_norm", "exterior_energy", "radiation_convergence", "synthesize_wave",
           "wave_grid", "wave_residual", "wave_snapshot"]
