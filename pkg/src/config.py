import os
import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional, Tuple

from dotenv import dotenv_values, load_dotenv

from .errors import ConfigError

# Load environment variables
load_dotenv()

# Logging Configuration
LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
LOG_FORMAT = os.environ.get('LOG_FORMAT', '%(asctime)s - %(levelname)s - %(message)s')

# Application Configuration
APP_NAME = os.environ.get('APP_NAME', 'faceresp')
DEFAULT_JOBS = int(os.environ.get('FACERESP_JOBS', 1))
DEFAULT_SEED = int(os.environ.get('FACERESP_SEED', 0))
DEFAULT_OUT_DIR = os.environ.get('FACERESP_OUT', 'out')

KERNELS = ('central', 'forward', 'five_point')
TEMPLATE_MODES = ('parametric', 'data')
AGGREGATIONS = ('per_sequence', 'global')


def get_log_level():
    """Convert string log level to logging constant"""
    levels = {
        'DEBUG': logging.DEBUG,
        'INFO': logging.INFO,
        'WARNING': logging.WARNING,
        'ERROR': logging.ERROR,
        'CRITICAL': logging.CRITICAL
    }
    return levels.get(LOG_LEVEL.upper(), logging.INFO)


@dataclass(frozen=True)
class ResponseConfig:
    """Knobs of the intensity pipeline (derivative, peaks, weighting fallbacks)."""
    kernel: str = 'central'
    sigma: float = 1.0
    min_prominence: float = 0.3
    # None means max(3, T // 10)
    min_separation: Optional[int] = None
    min_activity: float = 0.5
    # None keeps points with erratic frame-to-frame jumps in the weighting
    max_jitter: Optional[float] = 5.0
    median_excludes_degenerate: bool = True
    fallback_enabled: bool = True
    reference_index: Optional[int] = None
    start_fraction: float = 0.1

    def separation_for(self, num_frames: int) -> int:
        if self.min_separation is not None:
            return self.min_separation
        return max(3, num_frames // 10)


@dataclass(frozen=True)
class TemplateConfig:
    mode: str = 'parametric'
    total_len: int = 100
    transition_len: int = 30
    smoothing: int = 5


@dataclass(frozen=True)
class MetricConfig:
    aggregation: str = 'per_sequence'
    # None rescales predictions to the truth maximum
    rescale: Optional[float] = None
    # used for apex-only truth rows without their own peak_value
    peak_value: Optional[float] = None


@dataclass(frozen=True)
class RunConfig:
    response: ResponseConfig = field(default_factory=ResponseConfig)
    template: TemplateConfig = field(default_factory=TemplateConfig)
    metrics: MetricConfig = field(default_factory=MetricConfig)
    window: int = 30
    cluster_k: int = 3
    keep_fraction: float = 0.25
    jobs: int = DEFAULT_JOBS
    seed: int = DEFAULT_SEED
    target_len: int = 30

    def with_overrides(self, **kwargs: Any) -> 'RunConfig':
        """Return a copy with top-level fields replaced, ignoring None values."""
        changes = {key: value for key, value in kwargs.items() if value is not None}
        return replace(self, **changes) if changes else self


def _parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional(parser: Callable[[str], Any]) -> Callable[[str], Any]:
    def parse(text: str) -> Any:
        if text.strip().lower() in ('', 'none', 'null'):
            return None
        return parser(text)
    return parse


def _choice(options: Tuple[str, ...]) -> Callable[[str], str]:
    def parse(text: str) -> str:
        value = text.strip()
        if value not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return value
    return parse


def _positive(value: Any) -> bool:
    return value is None or value > 0


def _non_negative(value: Any) -> bool:
    return value is None or value >= 0


def _fraction(value: Any) -> bool:
    return 0 <= value <= 1


# key -> (section, field name, parser, range check)
CONFIG_KEYS: Dict[str, Tuple[Optional[str], str, Callable[[str], Any], Callable[[Any], bool]]] = {
    'kernel': ('response', 'kernel', _choice(KERNELS), lambda v: True),
    'sigma': ('response', 'sigma', float, _non_negative),
    'min_prominence': ('response', 'min_prominence', float, _fraction),
    'min_separation': ('response', 'min_separation', _optional(int), _positive),
    'min_activity': ('response', 'min_activity', float, _fraction),
    'max_jitter': ('response', 'max_jitter', _optional(float), lambda v: v is None or v >= 1),
    'median_excludes_degenerate': ('response', 'median_excludes_degenerate', _parse_bool, lambda v: True),
    'fallback_enabled': ('response', 'fallback_enabled', _parse_bool, lambda v: True),
    'reference_index': ('response', 'reference_index', _optional(int), _non_negative),
    'start_fraction': ('response', 'start_fraction', float, lambda v: 0 < v <= 0.5),
    'template_mode': ('template', 'mode', _choice(TEMPLATE_MODES), lambda v: True),
    'template_total': ('template', 'total_len', int, lambda v: v >= 3),
    'template_transition': ('template', 'transition_len', int, lambda v: v >= 2),
    'template_smoothing': ('template', 'smoothing', int, _non_negative),
    'aggregation': ('metrics', 'aggregation', _choice(AGGREGATIONS), lambda v: True),
    'rescale': ('metrics', 'rescale', _optional(float), _positive),
    'peak_value': ('metrics', 'peak_value', _optional(float), _positive),
    'window': (None, 'window', int, lambda v: v >= 2),
    'cluster_k': (None, 'cluster_k', int, lambda v: v >= 1),
    'keep_fraction': (None, 'keep_fraction', float, lambda v: 0 < v <= 1),
    'jobs': (None, 'jobs', int, lambda v: v >= 1),
    'seed': (None, 'seed', int, _non_negative),
    'target_len': (None, 'target_len', int, lambda v: v >= 2),
}


def parse_config_values(values: Dict[str, Optional[str]]) -> RunConfig:
    """
    Build a RunConfig from raw key=value strings.

    Args:
        values: Mapping of config keys to their raw string values

    Returns:
        RunConfig with defaults for every key that is absent

    Raises:
        ConfigError: Unknown key, unparsable value or value out of range
    """
    sections: Dict[Optional[str], Dict[str, Any]] = {None: {}, 'response': {}, 'template': {}, 'metrics': {}}
    for key, raw in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key: {key}")
        section, name, parser, check = CONFIG_KEYS[key]
        if raw is None:
            raise ConfigError(f"config key {key} has no value")
        try:
            value = parser(raw)
        except ValueError as e:
            raise ConfigError(f"invalid value for {key}: {raw!r} ({e})") from e
        if value is not None and not check(value):
            raise ConfigError(f"value out of range for {key}: {raw!r}")
        sections[section][name] = value

    template = TemplateConfig(**sections['template'])
    if template.total_len <= 2 * template.transition_len:
        raise ConfigError("template_total must exceed twice template_transition")
    config = RunConfig(
        response=ResponseConfig(**sections['response']),
        template=template,
        metrics=MetricConfig(**sections['metrics']),
        **sections[None],
    )
    if config.window > template.total_len:
        raise ConfigError("window must not exceed template_total")
    return config


def load_run_config(path: Optional[str]) -> RunConfig:
    """
    Load a key=value run config file; None gives the defaults.

    Raises:
        ConfigError: Missing file or invalid content
    """
    if path is None:
        return RunConfig()
    if not os.path.isfile(path):
        raise ConfigError(f"config file not found: {path}")
    return parse_config_values(dict(dotenv_values(path)))


def _format_value(value: Any) -> str:
    if value is None:
        return 'none'
    if isinstance(value, bool):
        return 'true' if value else 'false'
    return repr(value) if isinstance(value, float) else str(value)


def dump_config(config: RunConfig, path: str) -> None:
    """Write a config in the same key=value format load_run_config reads."""
    lines = []
    for key, (section, name, _, _) in CONFIG_KEYS.items():
        owner = config if section is None else getattr(config, section)
        lines.append(f"{key}={_format_value(getattr(owner, name))}")
    with open(path, 'w', encoding='utf-8') as f:
        f.write('\n'.join(lines) + '\n')


__all__ = [
    'APP_NAME', 'LOG_LEVEL', 'LOG_FORMAT', 'DEFAULT_JOBS', 'DEFAULT_SEED', 'DEFAULT_OUT_DIR',
    'ResponseConfig', 'TemplateConfig', 'MetricConfig', 'RunConfig',
    'get_log_level', 'load_run_config', 'parse_config_values', 'dump_config',
]
