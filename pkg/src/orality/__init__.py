"""Orality: a speech-first semantic canvas.

Dictated transcripts are chunked by a chat model into topic and content
nodes, laid out by PCA projection plus thresholded attractive refinement,
restructured by verbal instructions, deepened with AI questions and conflict
edges, tracked as a snapshot timeline, and exported as memos over a
real-time JSON event protocol.
"""

from .history import Snapshot, Timeline, Trigger
from .layout import LayoutParams
from .model import CanvasState, ConflictEdge, ContentNode, NodeKind, TopicNode
from .providers import Providers, mock_providers, providers_from_env
from .server import create_app
from .session import Session, SessionDocument, load_session, save_session

__version__ = "0.1.0"

__all__ = [
    "CanvasState",
    "ConflictEdge",
    "ContentNode",
    "LayoutParams",
    "NodeKind",
    "Providers",
    "Session",
    "SessionDocument",
    "Snapshot",
    "Timeline",
    "TopicNode",
    "Trigger",
    "__version__",
    "create_app",
    "load_session",
    "mock_providers",
    "providers_from_env",
    "save_session",
]
