"""Reference model server for the motif-attrib wire protocol.

Wraps a callable graph model as a value-function backend: the engine sends
node subsets, the bridge builds the induced subgraph and returns the model's
scalar. Ships a small registry of deterministic toy models.
"""

from .models import (
    BridgeInputError,
    GraphSpec,
    ModelFn,
    build_model,
    make_degree_sum,
    make_message_passing,
    make_motif_indicator,
    toy_models,
)
from .server import WIRE_PROTOCOL, serve_session, serve_stdio, serve_tcp

__version__ = "0.1.0"

__all__ = [
    "BridgeInputError",
    "GraphSpec",
    "ModelFn",
    "WIRE_PROTOCOL",
    "build_model",
    "make_degree_sum",
    "make_message_passing",
    "make_motif_indicator",
    "serve_session",
    "serve_stdio",
    "serve_tcp",
    "toy_models",
    "__version__",
]
