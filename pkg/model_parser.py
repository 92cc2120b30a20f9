#!/usr/bin/env python3
"""
ModelParser - parsing of model strings, plot bounds and run configuration files
Grammar: cue+cue | mcue:M[@scale] | cue+gue:p
"""

import logging
import math
import re
from typing import Any, Dict, Tuple

import yaml

from frvkit.closed_models import CueGue, CueSum, ModelSpec
from frvkit.errors import ModelParseError

logger = logging.getLogger(__name__)

_NUMBER = r'[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?'
_MCUE = re.compile(rf'^mcue:(\d+)(?:@({_NUMBER}))?$')
_CUE_GUE = re.compile(rf'^cue\+gue:({_NUMBER})$')

CONFIG_KEYS = {
    'model', 'bounds', 'grid', 'engine', 'n', 'samples', 'seed', 'bins',
    'threads', 'output', 'input', 'report', 'kind', 'border', 'rays', 'suites',
    'quick', 'pdf', 'csv', 'verbose',
}


class ModelParser:
    """
    Parser for the command-line model grammar and run configuration
    Each model family has a dedicated parsing method.
    """

    def __init__(self):
        self.last_text = ""

    def parse_model(self, text: str) -> ModelSpec:
        """
        Main entry point: model string to ModelSpec

        Args:
            text: e.g. 'cue+cue', 'mcue:5', 'mcue:10@0.316', 'cue+gue:0.75'

        Raises:
            ModelParseError: unknown family or invalid parameter
        """
        self.last_text = text
        normalized = (text or '').strip().lower()

        if normalized == 'cue+cue':
            return CueSum(2)
        elif normalized.startswith('mcue:'):
            return self.parse_mcue(normalized)
        elif normalized.startswith('cue+gue:'):
            return self.parse_cue_gue(normalized)
        raise ModelParseError(f"unknown model '{text}'; expected cue+cue, mcue:M[@scale] or cue+gue:p")

    def parse_mcue(self, text: str) -> CueSum:
        match = _MCUE.match(text)
        if not match:
            raise ModelParseError(f"malformed M-CUE model '{text}'; expected mcue:M or mcue:M@scale")
        m = int(match.group(1))
        scale = float(match.group(2)) if match.group(2) is not None else 1.0
        try:
            return CueSum(m, scale)
        except ValueError as e:
            raise ModelParseError(str(e)) from e

    def parse_cue_gue(self, text: str) -> CueGue:
        match = _CUE_GUE.match(text)
        if not match:
            raise ModelParseError(f"malformed CUE+GUE model '{text}'; expected cue+gue:p")
        try:
            return CueGue(float(match.group(1)))
        except ValueError as e:
            raise ModelParseError(str(e)) from e

    def parse_bounds(self, text: str) -> Tuple[float, float, float, float]:
        """
        'x0:x1:y0:y1' with x0 < x1 and y0 < y1

        Raises:
            ModelParseError: wrong field count, non-numeric or unordered bounds
        """
        fields = (text or '').split(':')
        if len(fields) != 4:
            raise ModelParseError(f"bounds '{text}' must have the form x0:x1:y0:y1")
        try:
            x0, x1, y0, y1 = (float(f) for f in fields)
        except ValueError as e:
            raise ModelParseError(f"bounds '{text}' are not numeric") from e
        if not all(math.isfinite(v) for v in (x0, x1, y0, y1)):
            raise ModelParseError(f"bounds '{text}' must be finite")
        if not (x0 < x1 and y0 < y1):
            raise ModelParseError(f"bounds '{text}' are not well-ordered")
        return x0, x1, y0, y1

    def load_config(self, path: str) -> Dict[str, Any]:
        """
        Run configuration from a YAML mapping

        Raises:
            ModelParseError: unreadable file, not a mapping, or unknown keys
        """
        try:
            with open(path, 'r', encoding='utf-8') as handle:
                data = yaml.safe_load(handle)
        except OSError as e:
            raise ModelParseError(f"cannot read config {path}: {e}") from e
        except yaml.YAMLError as e:
            raise ModelParseError(f"config {path} is not valid YAML: {e}") from e

        if data is None:
            return {}
        if not isinstance(data, dict):
            raise ModelParseError(f"config {path} must be a mapping, got {type(data).__name__}")
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ModelParseError(f"config {path} has unknown keys: {', '.join(sorted(unknown))}")
        if 'model' in data:
            self.parse_model(str(data['model']))
        if 'bounds' in data:
            self.parse_bounds(str(data['bounds']))
        logger.debug(f"loaded config {path}: {data}")
        return data
