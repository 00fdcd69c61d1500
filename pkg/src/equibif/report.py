"""Shared scan-output record and its lossless serialization.

The report is the one object every detector produces and the CLI persists:
per-sweep staircase samples, per-instant verdicts with gate failures and
fingerprints, and an echo of the configuration that produced them.  Field
order is frozen (schema version embedded) so identical runs serialize to
identical bytes.
"""

import json
from dataclasses import dataclass, field

from . import SCHEMA_VERSION, __version__
from .errors import EquibifError


def _label_to_json(label):
    if isinstance(label, tuple):
        return list(label)
    return label


def _label_from_json(label):
    if isinstance(label, list):
        return tuple(label)
    return label


def entries_to_json(entries):
    return [[_label_to_json(lab), int(m)] for lab, m in entries]


def entries_from_json(data):
    return tuple((_label_from_json(lab), int(m)) for lab, m in data)


@dataclass(frozen=True)
class SweepSample:
    parameter: float
    mean_curvature: float = None
    mean_curvature_derivative: float = None
    morse_index: int = None
    mode_negative_counts: tuple = ()

    def to_dict(self):
        return {
            "parameter": self.parameter,
            "mean_curvature": self.mean_curvature,
            "mean_curvature_derivative": self.mean_curvature_derivative,
            "morse_index": self.morse_index,
            "mode_negative_counts": list(self.mode_negative_counts),
        }

    @staticmethod
    def from_dict(d):
        return SweepSample(
            parameter=d["parameter"],
            mean_curvature=d["mean_curvature"],
            mean_curvature_derivative=d["mean_curvature_derivative"],
            morse_index=d["morse_index"],
            mode_negative_counts=tuple(d["mode_negative_counts"]),
        )


@dataclass(frozen=True)
class InstantRecord:
    parameter: float
    fired: str
    gate_failures: tuple = ()
    index_before: int = None
    index_after: int = None
    fingerprint_before: tuple = ()
    fingerprint_after: tuple = ()
    symmetry_breaking: bool = None
    mode: object = None

    def __post_init__(self):
        if self.fired != "none" and self.gate_failures:
            raise EquibifError("an instant cannot fire with failed gates")
        if self.fired == "morse_jump" and self.index_before == self.index_after:
            raise EquibifError("morse_jump requires an index change")
        if self.fired == "representation_jump" \
                and self.fingerprint_before == self.fingerprint_after:
            raise EquibifError("representation_jump requires a fingerprint change")

    def to_dict(self):
        return {
            "parameter": self.parameter,
            "fired": self.fired,
            "gate_failures": list(self.gate_failures),
            "index_before": self.index_before,
            "index_after": self.index_after,
            "fingerprint_before": entries_to_json(self.fingerprint_before),
            "fingerprint_after": entries_to_json(self.fingerprint_after),
            "symmetry_breaking": self.symmetry_breaking,
            "mode": _label_to_json(self.mode),
        }

    @staticmethod
    def from_dict(d):
        return InstantRecord(
            parameter=d["parameter"],
            fired=d["fired"],
            gate_failures=tuple(d["gate_failures"]),
            index_before=d["index_before"],
            index_after=d["index_after"],
            fingerprint_before=entries_from_json(d["fingerprint_before"]),
            fingerprint_after=entries_from_json(d["fingerprint_after"]),
            symmetry_breaking=d["symmetry_breaking"],
            mode=_label_from_json(d["mode"]),
        )


@dataclass
class BifurcationReport:
    family: str
    config: dict = field(default_factory=dict)
    sweep: list = field(default_factory=list)
    instants: list = field(default_factory=list)
    notes: list = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION
    tool_version: str = __version__

    def __post_init__(self):
        self.instants = sorted(self.instants, key=lambda i: i.parameter)
        self.sweep = sorted(self.sweep, key=lambda s: s.parameter)

    def to_dict(self):
        return {
            "schema_version": self.schema_version,
            "tool_version": self.tool_version,
            "family": self.family,
            "config": self.config,
            "sweep": [s.to_dict() for s in self.sweep],
            "instants": [i.to_dict() for i in self.instants],
            "notes": list(self.notes),
        }

    def to_json(self):
        # stable field order, no whitespace surprises, trailing newline
        return json.dumps(self.to_dict(), indent=2, sort_keys=False,
                          ensure_ascii=False) + "\n"

    @staticmethod
    def from_dict(d):
        report = BifurcationReport(
            family=d["family"],
            config=d["config"],
            sweep=[SweepSample.from_dict(s) for s in d["sweep"]],
            instants=[InstantRecord.from_dict(i) for i in d["instants"]],
            notes=list(d["notes"]),
        )
        report.schema_version = d["schema_version"]
        report.tool_version = d["tool_version"]
        return report

    @staticmethod
    def from_json(text):
        return BifurcationReport.from_dict(json.loads(text))


CSV_BASE_COLUMNS = ["parameter", "H", "H_prime", "morse_index"]


def csv_rows(report, mode_labels=None):
    """Header plus one row per sweep sample; column order is frozen."""
    n_modes = max((len(s.mode_negative_counts) for s in report.sweep),
                  default=0)
    if mode_labels is None:
        mode_labels = [f"neg_mode_{i}" for i in range(n_modes)]
    header = CSV_BASE_COLUMNS + list(mode_labels)
    rows = [header]
    for s in report.sweep:
        row = [_fmt(s.parameter), _fmt(s.mean_curvature),
               _fmt(s.mean_curvature_derivative),
               "" if s.morse_index is None else str(s.morse_index)]
        counts = list(s.mode_negative_counts) + [""] * (n_modes - len(s.mode_negative_counts))
        row += [str(c) for c in counts]
        rows.append(row)
    return rows


def _fmt(x):
    if x is None:
        return ""
    return repr(float(x))
