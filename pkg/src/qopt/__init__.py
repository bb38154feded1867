"""Phase-space representations, photon statistics, and exact linear evolution
for Gaussian, squeezed, and even/odd cat states of N-mode light."""

__version__ = "0.1.0"

from .cats import CatState, cat_moments, cat_normalization, cat_pnd, cat_q_eval, cat_wigner_eval
from .dynamics import (FlowSample, FreeSystem, OscillatorSystem, QuadraticHamiltonian,
                       SymplecticFlow, evolve_gaussian, flow_expm, free_particle,
                       harmonic_oscillator, integrate_complex_flow, integrate_symplectic_flow)
from .gaussian import (GaussianState, PureGaussianSpec, QRep, from_pure_gaussian, from_qrep,
                       make_coherent, make_squeezed_vacuum, make_thermal_oscillator,
                       photon_moments, photon_pnd, photon_pnd_table, q_eval, to_qrep,
                       validate_state, wigner_eval)
from .hermite import (HermiteParams, MultiIndex, OverlapSpec, fock_wavefunction_eval,
                      gaussian_hermite_overlap, hermite1d_eval, mv_hermite_eval,
                      mv_hermite_table)
from .parametric import (EpsilonTrajectory, FrequencyProfile, expression_profile,
                         packet_wavefunction_eval, parametric_cat_wavefunction,
                         preset_profile, solve_epsilon, squeezed_number_wavefunction,
                         squeezed_vacuum_pnd, tabulated_profile, variances_correlation)
from .tomography import (Sinogram, WignerGrid, forward_marginal_gaussian,
                         forward_marginal_numeric, gaussian_sinogram, inverse_radon,
                         symplectic_marginal, wigner_from_symplectic)

__all__ = [name for name in dir() if not name.startswith("_")]
