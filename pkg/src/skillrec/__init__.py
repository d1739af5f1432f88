"""Context-aware programming-exercise recommendation engine.

Models student skills from source-code submission embeddings with eight
per-topic classifiers and ranks unseen homework problems by cosine
similarity between predicted student and problem skill vectors, next to
solution-time and correctness baselines and a full offline evaluation
harness.
"""

__version__ = "0.1.0"

from .domain import SkillLevel, SkillTopic, SkillVector, TOPICS  # noqa: F401
from .embed import Embedding  # noqa: F401
