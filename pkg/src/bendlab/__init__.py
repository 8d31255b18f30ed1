"""Guitar bend labelling, tablature features and interpretable bend prediction."""

from .bendsem import Label, LabeledEvent, collapse_ties, decompose_complex, label_events, simplify
from .featex import FEATURE_NAMES, REGISTRY, FeatureRecord, beat_strength, extract_features, pc_wrt_root, scale_root
from .model import (
    BendAnnotation,
    BendKind,
    KeySignature,
    Measure,
    Note,
    NoteEvent,
    Score,
    TimeSignature,
    Track,
    Tuning,
    pitch_of,
    validate_score,
)
from .tabio import ParseError, parse_structured, parse_text, serialize_structured, serialize_text

__version__ = "0.1.0"
