"""framehydro: biaxial nematic frame hydrodynamics on a periodic torus.

An SO(3)-valued orientation field coupled to incompressible Navier-Stokes,
integrated pseudo-spectrally with structure-preserving exponential frame
updates, plus a diagnostics suite for the energy dissipation law and the
higher-order energy/dissipation functionals.
"""

from .constitutive import ViscousParams, strain_tensors, tensor_bases, viscous_stress
from .diagnostics import (DissipativeEstimateReport, EnergyFunctionals,
                          blowup_monitor, dissipative_estimate_report,
                          energy_functionals, h_delta_s)
from .dynamics import (DissipationChannels, Tendency, energy_production_audit,
                       frame_angular_velocity, velocity_tendency)
from .elastic_energy import (ElasticParams, body_force, density_original,
                             density_reformulated, elastic_stress,
                             molecular_fields, rotational_variational_derivatives,
                             total_energy)
from .errors import (BadSpec, ChecksumMismatch, FormatError, GridMismatch,
                     IoError, NonFiniteField, SimulationError, SingularFrame,
                     SLimitExceeded, StepUnstable)
from .frame_algebra import (exp_update, exp_update_field, identity_field,
                            normal_basis, orthogonal_decompose, retract,
                            retract_field, rotational_derivative_of_frame,
                            tangent_basis)
from .integrator import StateSnapshot, StepConfig, relax_frame, run, step
from .cli_io import (Ledger, LedgerRecorder, SimConfig, gen_initial,
                     load_config, read_snapshot, write_snapshot)
from .spectral_grid import FiniteDifferenceBackend, Grid

__version__ = "0.1.0"
