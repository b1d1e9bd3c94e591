"""
Latticeworks v1.0 - Spec Manager
=================================
Збереження та завантаження JSON-специфікацій експериментів.
A spec fully determines a run: subcommand, parameters, seed and output
options.
"""

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

import config
from logger import get_logger
from reports import encode_value
from validators import ValidationError

logger = get_logger(__name__)


@dataclass
class ExperimentSpec:
    """One CLI invocation in serializable form; params hold raw option values"""
    group: str
    action: str
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = config.DEFAULT_SEED
    format: str = config.DEFAULT_FORMAT
    workers: int = config.DEFAULT_WORKERS
    budget: int = config.ENUMERATION_BUDGET
    out: Optional[str] = None

    @property
    def command(self) -> str:
        return f"{self.group} {self.action}"

    def to_dict(self) -> Dict[str, Any]:
        return {
            'group': self.group,
            'action': self.action,
            'params': encode_value(dict(sorted(self.params.items()))),
            'seed': self.seed,
            'format': self.format,
            'workers': self.workers,
            'budget': self.budget,
            'out': self.out,
        }

    def with_params(self, **changes: Any) -> "ExperimentSpec":
        params = dict(self.params)
        params.update(changes)
        return ExperimentSpec(
            self.group, self.action, params, self.seed, self.format,
            self.workers, self.budget, self.out,
        )


def spec_to_json(spec: ExperimentSpec) -> str:
    """Export spec as JSON string with version and creation stamp"""
    data = {
        'version': config.SPEC_FILE_VERSION,
        'app_version': config.APP_VERSION,
        'created': datetime.now().isoformat(),
    }
    data.update(spec.to_dict())
    return json.dumps(data, indent=4, ensure_ascii=False)


def spec_from_json(text: str) -> ExperimentSpec:
    """
    Parse a spec; 'version' and 'created' are informational

    Raises:
        ValidationError: Malformed JSON or missing fields
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ValidationError(f"Invalid JSON format: {e}")

    if not isinstance(data, dict):
        raise ValidationError("Spec file must hold a JSON object")
    for key in ('group', 'action'):
        if key not in data:
            raise ValidationError(f"Spec file is missing '{key}'")

    version = data.get('version', config.SPEC_FILE_VERSION)
    if version > config.SPEC_FILE_VERSION:
        logger.warning(f"Spec file version {version} is newer than supported {config.SPEC_FILE_VERSION}")
    else:
        logger.info(f"Loading spec version: {version}")

    params = data.get('params') or {}
    if not isinstance(params, dict):
        raise ValidationError("Spec 'params' must be an object")

    try:
        return ExperimentSpec(
            group=str(data['group']),
            action=str(data['action']),
            params=params,
            seed=int(data.get('seed', config.DEFAULT_SEED)),
            format=str(data.get('format', config.DEFAULT_FORMAT)),
            workers=int(data.get('workers', config.DEFAULT_WORKERS)),
            budget=int(data.get('budget', config.ENUMERATION_BUDGET)),
            out=data.get('out'),
        )
    except (TypeError, ValueError) as e:
        raise ValidationError(f"Malformed spec field: {e}")


def save_spec(spec: ExperimentSpec, path: Union[str, Path]) -> Tuple[bool, Optional[str]]:
    """
    Returns:
        (success, error_message)
    """
    try:
        Path(path).write_text(spec_to_json(spec) + '\n', encoding='utf-8')
        logger.info(f"Spec saved: {path}")
        return True, None
    except OSError as e:
        msg = f"Failed to save spec: {e}"
        logger.error(msg)
        return False, msg


def load_spec(path: Union[str, Path]) -> ExperimentSpec:
    """
    Raises:
        ValidationError: Unreadable or malformed spec file
    """
    try:
        text = Path(path).read_text(encoding='utf-8')
    except OSError as e:
        logger.error(f"Failed to read spec {path}: {e}")
        raise ValidationError(f"Cannot read spec file {path}: {e}")
    spec = spec_from_json(text)
    logger.info(f"Spec loaded: {spec.command}")
    return spec
