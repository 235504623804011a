"""Electric-motor condition classification: Healthy / Broken / Needs-PM."""

from motorpm.data import (
    CHANNELS,
    ConditionLabel,
    Dataset,
    MotorReading,
    OpenCircuit,
    Sound,
    encode,
    parse_csv,
    serialize_csv,
    stratified_split,
)

__all__ = [
    "CHANNELS",
    "ConditionLabel",
    "Dataset",
    "MotorReading",
    "OpenCircuit",
    "Sound",
    "encode",
    "parse_csv",
    "serialize_csv",
    "stratified_split",
]
