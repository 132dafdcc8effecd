"""Multilevel lattices from nested binary polar codes.

Rate design through density evolution on the per-level folded Gaussian
channels, SC / CRC-aided list decoding, and reproducible Monte Carlo
word-error-rate simulation on the unconstrained power channel.
"""

from .channels import AmgnLevel, AwgnChannel, awgn_sample, llr_from_amgn, mod_star
from .decoders import (ScDecodeResult, SclConfig, sc_decode, sc_decode_batch,
                       scl_decode, scl_decode_batch)
from .density import (DEFAULT_GRID, LlrDensity, LlrGrid, PositionReliabilities,
                      amgn_llr_density, cn_convolve, de_wer, evolve, point_mass,
                      vn_convolve)
from .design import (DesignInfeasibleError, RateCurve, RateQuery, RateResult,
                     achievable_rate, design_lattice, make_design, rate_curve,
                     sigma2_for_uncoded_target, uncoded_dimension_error, uncoded_wer)
from .lattice import (LatticeDesign, LatticePoint, MultistageResult,
                      design_from_json, design_to_json, generator_matrix,
                      lattice_encode, log2_volume, multistage_decode,
                      multistage_decode_batch, nearest_point_exhaustive,
                      sigma2_for_vnr, vnr, volume)
from .polar import (NestedCodeFamily, PolarCode, ReliabilityOrder, crc_attach,
                    crc_check, make_polar_code, nested_generators, polar_encode,
                    polar_transform, pw_ordering, select_info_set)
from .sim import SimPlan, SimStats, run_wer, stats_to_csv, transmit_point

__version__ = "0.1.0"
