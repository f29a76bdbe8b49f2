"""Game taxonomy registry.

Classifies each benchmark game along three axes: exploration difficulty,
reward structure, and typical on-screen object density.  The hard-sparse
cell is intentionally empty; that category needs orders of magnitude more
training steps than the short-budget experiments here target.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TaxonomyEntry:
    game_id: str
    exploration: str  # "easy" or "hard"
    reward: str  # "human-optimal", "score-exploit", "dense", "sparse"
    objects: str  # "low" or "high"


_ENTRIES = [
    TaxonomyEntry("Breakout", "easy", "human-optimal", "low"),
    TaxonomyEntry("Pong", "easy", "human-optimal", "low"),
    TaxonomyEntry("Kung Fu Master", "easy", "score-exploit", "low"),
    TaxonomyEntry("Road Runner", "easy", "score-exploit", "low"),
    TaxonomyEntry("Ms. Pac-Man", "hard", "dense", "low"),
    TaxonomyEntry("Q*Bert", "hard", "dense", "low"),
    TaxonomyEntry("Space Invaders", "easy", "human-optimal", "high"),
    TaxonomyEntry("Chopper Command", "easy", "human-optimal", "high"),
    TaxonomyEntry("Seaquest", "easy", "score-exploit", "high"),
    TaxonomyEntry("Beam Rider", "easy", "score-exploit", "high"),
    TaxonomyEntry("Frostbite", "hard", "dense", "high"),
    TaxonomyEntry("Zaxxon", "hard", "dense", "high"),
]

TAXONOMY = {e.game_id: e for e in _ENTRIES}


def taxonomy_lookup(game_id: str) -> TaxonomyEntry:
    try:
        return TAXONOMY[game_id]
    except KeyError:
        raise KeyError(f"unknown game id {game_id!r}; known: {sorted(TAXONOMY)}") from None
