"""Multiplex-network diffusion toolkit.

Multilayer graphs, multiplexity orders and scores, SIS threshold contagion,
two-layer mean-field steady states with exact oracles, diffusion centrality,
dyad-level statistics with a PCA backbone, and a Puffer-preconditioned LASSO
regression pipeline over synthetic villages.
"""

from .multigraph import (EdgeRecord, MultiGraph, aggregate, build_from_edges,
                         from_layers, layer_set, neighbors, read_edge_file,
                         symmetrize, symmetrize_graph, write_edge_file)
from .multiplexity import (DominanceMove, IsolatedNodeError, Profile,
                           ProfileDistribution, demultiplex_distribution,
                           enumerate_demultiplexing_moves, high_mpx_flags,
                           is_dominance_move, multiplexing_score,
                           profile, profile_distribution,
                           total_multiplexity_index, village_score)
from .transmission import (TransmissionModel, corr_condition, independent_model,
                           no_transmission_prob, sample_transmissions,
                           transmission_pmf)
from .contagion import (GridResult, SimConfig, SimResult, build_comparison_pair,
                        run_grid, simulate)
from .meanfield import (PropositionReport, SteadyState,
                        individual_infection_prob_exact, infection_prob_profile,
                        solve_steady_state, steady_state_profile,
                        verify_complex_individual, verify_simple_individual,
                        verify_sis_ordering)
from .centrality import (CentralityVector, diameter, diffusion_centrality,
                         layer_centrality, seed_set_dc, spectral_radius)
from .stats import (DyadMatrix, LayerStats, PcaResult, backbone,
                    build_dyad_matrix, layer_correlation, layer_stats, pca_dyads)
from .regress import (DesignMatrix, RegressionResult, SynthRctConfig,
                      SynthRctResult, design_matrix, interaction_regression,
                      lasso_path, ols, post_lasso_ols, puffer_transform,
                      synth_rct)

__version__ = "0.1.0"
