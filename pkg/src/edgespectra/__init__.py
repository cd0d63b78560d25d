"""Spectra and spectral flow of distance-modulated edge Hamiltonians.

The package studies sum_x x*H_x for a translation-invariant free-fermion
model on Z^2, reduced at fixed transverse momentum ky to a weighted chain.
Routes into its spectrum: the kx-monodromy condition (exact roots and the
high-energy ladder asymptotics), real-space truncations (dense solves with
a spurious-state filter), eigenpair continuation in ky, and from those the
spectral flow, the edge-side classification and the thermal edge current.
"""

import os as _os

# bound the BLAS worker pools before numpy is loaded anywhere in the package
_threads = _os.environ.get("EDGE_SPECTRA_THREADS")
if _threads:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS",
                 "MKL_NUM_THREADS"):
        _os.environ.setdefault(_var, _threads)

__version__ = "0.1.0"

from .model import (BlochModel, GapReport, build_constant, build_harper,
                    validate_gaps)
from .bands import (BandData, ChernRecord, GapCollapseError, berry_phases,
                    bulk_ranges, chern_numbers, decompose)
from .monodromy import (AsymptoticSpectrum, PhaseData, SpectralPoint,
                        adiabatic_propagator, asymptotic_spectrum, defects,
                        eigenfunction, exact_spectrum, min_branch_spacing,
                        phase_data, propagate, propagate_many)
from .discrete import (EdgeDispersion, EdgeModeRecord, TruncatedOperator,
                       build_truncation, bulk_band_extents, count_below,
                       dense_spectrum, edge_dispersion, spurious_filter,
                       window_spectrum)
from .edgeclass import (ResolutionError, SideVerdict, calibrate_convention,
                        classify, decay_profile, mode_coefficients)
from .tracking import (ResidualBlowup, StepUnderflow, TrackedBranch,
                       TruncationFamily, seed_pairs, transport)
from .flow import (FlowReport, edge_flows, family_winding, flow_window,
                   hall_conductance, side_of, spectral_flow)
from .current import (CurrentSample, EndpointResolutionWarning,
                      central_charge, mode_current)
