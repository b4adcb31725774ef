"""Training-free identity and position node embeddings from filtered random noise."""

__version__ = "0.1.0"

from .engine import (EmbeddingMatrix, RfaConfig, activate, init_noise, normalize,  # noqa: E402
                     preset_config, rfa_embed)
from .errors import DomainError, NumericError, ParseError, RfaError  # noqa: E402
from .evaluation import (EvalReport, LabelSet, f1_scores, fit_classifier, ntos,  # noqa: E402
                         predict, run_protocol, split)
from .generators import gen_barbell, gen_erdos_renyi, gen_role_ring, gen_sbm  # noqa: E402
from .graph import (ComponentMap, Graph, largest_connected_component,  # noqa: E402
                    load_edge_list)
from .spectral import (FilterConfig, Propagator, Spectrum, apply_propagator,  # noqa: E402
                       build_propagator, dense_spectrum, gershgorin_interval,
                       kernel_response, laplacian_identity_residual, spectrum_spread)

__all__ = [
    "ComponentMap", "DomainError", "EmbeddingMatrix", "EvalReport", "FilterConfig", "Graph",
    "LabelSet", "NumericError", "ParseError", "Propagator", "RfaConfig", "RfaError",
    "Spectrum", "activate", "apply_propagator", "build_propagator", "dense_spectrum",
    "f1_scores", "fit_classifier", "gen_barbell", "gen_erdos_renyi", "gen_role_ring",
    "gen_sbm", "gershgorin_interval", "init_noise", "kernel_response",
    "laplacian_identity_residual", "largest_connected_component", "load_edge_list",
    "normalize", "ntos", "predict", "preset_config", "rfa_embed", "run_protocol",
    "spectrum_spread", "split",
]
