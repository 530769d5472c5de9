"""Minimum-error discrimination of symmetric qudit states and its optical simulation."""

from ._validation import ConfigError, DomainError
from .campaign import (CampaignConfig, CampaignEntry, DiscriminationReport, aggregate,
                       emit_reports, enumerate_sets, reference_campaign_config, run_campaign,
                       run_set)
from .me_measure import (MEMeasurement, MinimumErrorDiscriminator, ProbabilityTable,
                         dft_matrix, embed_state, me_measurement, optimality_certificate,
                         outcome_table, p_correct)
from .optics import (IntensityPattern, NoiseModel, OpticalGeometry, ProbabilityEstimator,
                     capture_pattern, detector_positions, efficiency_compensation,
                     estimate_probabilities, focal_plane_amplitude, fresnel_amplitude,
                     transmission_coefficients)
from .qudit_core import (CascadeParams, SymmetricSetSpec, cascade_coeffs,
                         hyperspherical_coeffs, make_symmetric_set, random_coeffs,
                         symmetry_shift)
from .tomography import (MUBTomography, PhaseRetriever, fidelity, mle_refine,
                         mub_linear_inversion, mub_positions, phase_retrieval)

__version__ = "0.1.0"
