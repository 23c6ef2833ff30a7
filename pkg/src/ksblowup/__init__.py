"""Radially symmetric parabolic-elliptic Keller-Segel system with logistic-type dampening."""
from .blowup import BlowupReport, fit_power_law
from .certificate import BlowupCertificate, certify, riccati_time_bound
from .elliptic import compute_mean, compute_vr
from .errors import (ConfigError, DomainError, InfeasibleCertificateError, InfeasibleDatumError,
                     KSBlowupError, ParameterError, PreconditionError, RegimeError, StepFailure)
from .model import (InitialDatumSpec, ModelParameters, RadialGrid, RadialProfile, Regime, classify,
                    make_initial_datum)
from .usolver import StepControl, run_u, step_u
from .wsolver import SGrid, WState, run_w, step_w, u_to_w, w_to_u

__version__ = "0.1.0"
