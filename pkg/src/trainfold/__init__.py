"""trainfold: rank-3 lonely-direction fold automata for graph self-maps.

Builds the automaton of 5-edge rank-3 high-valence states carrying a
comprehensive loop that misses exactly two turns at the valence-4 vertex,
composes directed loops into graph self-maps, and certifies those maps
(train track, Perron-Frobenius, Whitehead graph connectivity, principality).
"""

from .errors import DomainError, StateCapExceeded
from .graph_core import (
    TRIVIAL_LOOP,
    CanonicalForm,
    Direction,
    Graph,
    Path,
    Relabeling,
    TrivialLoop,
    Turn,
    TurnSet,
    canonical_graph_key,
    canonical_key,
    canonicalize,
    enumerate_high_valence_graphs,
    is_comprehensive,
    isomorphisms,
    rank,
    tighten,
    turns_taken,
    valence_profile,
)

__version__ = "0.1.0"
