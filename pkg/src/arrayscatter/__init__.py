"""Two-excitation scattering of photons and spin waves on infinite atomic arrays."""
__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .lattice import (K0, GAMMA0, ArrayConfig, Classification, Dimension, Dispersion,  # noqa: F401
                      Polarization, classify_momentum, coupling_g, dispersion, dispersion_table,
                      export_dispersion_csv, is_bright, momentum_norm, wrap_momentum)
from .propagator import (PropagatorDecomposition, Side, critical_energies,  # noqa: F401
                         dark_pair_dos, level_set, local_propagator, pair_delta, pair_epsilon)
from .single_excitation import (atomic_amplitude, dressed_photon_realspace,  # noqa: F401
                                lorentzian, on_shell_chi, transmission)
from .two_excitation import (OnShellSMatrix, TMatrixContact, TMatrixGeneral,  # noqa: F401
                             dark_state, eta0_wavefunction, eta1_wavefunction,
                             eta2_wavefunction, on_shell_smatrix, tmatrix_contact,
                             tmatrix_general, two_photon_grid, two_photon_wavefunction)
from .cross_section import (IncomingConfig, beam_survival, cross_sections,  # noqa: F401
                            partial_cross_section, total_cross_section)
from .oracle import OracleReport, run_suite  # noqa: F401
