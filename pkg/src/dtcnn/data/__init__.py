"""Dataset ingestion, split protocols, synthetic textures and checkpoints."""
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .frames import read_frame, write_frame
from .manifest import DatasetManifest, SequenceInfo, load_sequence, read_manifest, scan, write_manifest
from .splits import Protocol, SplitPlan, make_splits, read_splits, write_splits
from .synth import DTKind, synth_dt, write_synthetic_dataset

__all__ = [
    "Checkpoint", "load_checkpoint", "save_checkpoint", "read_frame", "write_frame",
    "DatasetManifest", "SequenceInfo", "load_sequence", "read_manifest", "scan", "write_manifest",
    "Protocol", "SplitPlan", "make_splits", "read_splits", "write_splits",
    "DTKind", "synth_dt", "write_synthetic_dataset",
]
