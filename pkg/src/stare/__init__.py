"""Simulation and analytics for adiabatic state transfer in a dephasing qubit."""

__version__ = "0.1.0"

from .analytics import (ExpansionCoefficients, correction_C,
                        correction_C_closed_form, correction_from_expansion,
                        expansion_at, i_min, infidelity_leading, lz_asymptotics,
                        mass_function, reconstruct_rho, t_min)
from .core import (DensityMatrix, EigenFrame, eigenframe, hamiltonian_q,
                   partial_trace_aux, projector_velocity)
from .errors import (DimensionError, IntegrationError, InvalidStateError,
                     ParameterError, QuadratureError, StiffnessError)
from .integrator import (IntegrationConfig, Trajectory, evolve,
                         infidelity_final, run_protocol)
from .liouvillians import (LiouvillianKind, LiouvillianSpec, RateProfile,
                           rhs_composite, rhs_stare, rhs_unitary)
from .microscopic import (CompositeParams, ValidityReport, gamma_rate,
                          gamma_re_zero, run_composite, thermal_occupation,
                          validity_report)
from .schedules import (Schedule, ScheduleKind, SweepSpec, d_of_tau,
                        make_schedule, q_linear, q_optimal_stare,
                        q_roland_cerf, xi_constant)
