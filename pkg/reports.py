"""
Latticeworks v1.0 - Reports Module
===================================
ExperimentReport and its JSON / CSV renderings.

Exact quantities are written as rational strings, statistical ones as
(estimate, se) pairs. Wall time is only serialized on request so equal
specs give byte-identical output.
"""

import io
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

import config
from logger import get_logger
from validators import ValidationError

logger = get_logger(__name__)


# === VALUE ENCODING ===

def encode_value(value: Any) -> Any:
    """JSON-safe form: Fractions as "a/b", big ints as decimal strings, numpy scalars unwrapped"""
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        value = int(value)
        return str(value) if abs(value) > 2 ** 53 else value
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return value
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, np.ndarray):
        return [encode_value(v) for v in value.tolist()]
    if isinstance(value, dict):
        return {str(k): encode_value(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode_value(v) for v in value]
    return str(value)


# === REPORT ===

@dataclass
class ExperimentReport:
    """
    Result of one experiment.

    se is set iff the estimate is statistical; exact reports carry their
    values in `values` (rational strings after encoding).
    """
    experiment: str
    params: Dict[str, Any]
    estimate: Optional[float] = None
    se: Optional[float] = None
    samples: Optional[int] = None
    seed: Optional[int] = None
    exact: bool = False
    values: Dict[str, Any] = field(default_factory=dict)
    rows: List[Dict[str, Any]] = field(default_factory=list)
    wall_time: Optional[float] = None
    version: str = config.APP_VERSION

    def __post_init__(self):
        if self.exact and self.se is not None:
            raise ValidationError(f"Exact report '{self.experiment}' cannot carry a standard error")

    @property
    def interval(self) -> Tuple[float, float]:
        """estimate ± 3·SE"""
        if self.estimate is None or self.se is None:
            raise ValidationError(f"Report '{self.experiment}' has no statistical estimate")
        return self.estimate - 3 * self.se, self.estimate + 3 * self.se

    def to_dict(self, include_timing: bool = False) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            'experiment': self.experiment,
            'version': self.version,
            'exact': self.exact,
            'params': encode_value(self.params),
        }
        if self.estimate is not None:
            data['estimate'] = encode_value(self.estimate)
        if self.se is not None:
            data['se'] = encode_value(self.se)
        if self.samples is not None:
            data['samples'] = self.samples
        if self.seed is not None:
            data['seed'] = self.seed
        if self.values:
            data['values'] = encode_value(self.values)
        if self.rows:
            data['rows'] = encode_value(self.rows)
        if include_timing and self.wall_time is not None:
            data['wall_time'] = round(self.wall_time, 6)
        return data

    def to_json(self, include_timing: bool = False) -> str:
        return json.dumps(self.to_dict(include_timing), indent=4, ensure_ascii=False, sort_keys=False)

    def to_frame(self) -> pd.DataFrame:
        """Rows if present, otherwise a one-row table of the scalar metrics"""
        if self.rows:
            return pd.DataFrame([encode_value(r) for r in self.rows])
        row: Dict[str, Any] = {'experiment': self.experiment}
        for key, value in self.params.items():
            if not isinstance(value, (list, tuple, dict)):
                row[key] = encode_value(value)
        if self.estimate is not None:
            row['estimate'] = self.estimate
        if self.se is not None:
            row['se'] = self.se
        if self.samples is not None:
            row['samples'] = self.samples
        for key, value in self.values.items():
            if not isinstance(value, (list, tuple, dict, np.ndarray)):
                row[key] = encode_value(value)
        return pd.DataFrame([row])

    def to_csv(self) -> str:
        buffer = io.StringIO()
        # десяткова крапка незалежно від локалі
        self.to_frame().to_csv(buffer, index=False, float_format='%.12g')
        return buffer.getvalue()


def reports_to_frame(reports: List[ExperimentReport]) -> pd.DataFrame:
    """One row per report; columns are the union of their scalar metrics"""
    frames = [r.to_frame() for r in reports]
    if not frames:
        return pd.DataFrame()
    return pd.concat(frames, ignore_index=True)


def render(report: ExperimentReport, fmt: str = config.DEFAULT_FORMAT, include_timing: bool = False) -> str:
    """
    Serialize a report

    Raises:
        ValidationError: Unknown format
    """
    if fmt not in config.SUPPORTED_FORMATS:
        raise ValidationError(f"Unsupported format: {fmt}. Supported: {', '.join(config.SUPPORTED_FORMATS)}")
    if fmt == 'csv':
        return report.to_csv()
    return report.to_json(include_timing)


def write_report(text: str, out: Optional[Union[str, Path]] = None) -> Tuple[bool, str]:
    """
    Write rendered output to a file, or stdout when out is None

    Returns:
        (success, error message)
    """
    if out is None:
        print(text)
        return True, ""
    try:
        Path(out).write_text(text if text.endswith('\n') else text + '\n', encoding='utf-8')
        logger.info(f"Report written: {out}")
        return True, ""
    except OSError as e:
        logger.error(f"Failed to write report {out}: {e}")
        return False, str(e)
