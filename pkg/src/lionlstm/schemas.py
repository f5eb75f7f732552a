"""JSON Schema documents for the metrics and report files the CLI writes.

They are plain dicts so downstream tools can validate outputs with any
Draft 2020-12 validator.
"""

_NUMBER = {"type": "number"}
_MONTH = {"type": "string", "pattern": r"^\d{4}-(0[1-9]|1[0-2])$"}
_KINDS = ["ffnn", "lstm", "lstm_la"]

CV_SUMMARY = {
    "type": "object",
    "required": ["folds", "min", "q1", "median", "q3", "max"],
    "properties": {
        "folds": {"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 100},
                  "minItems": 2},
        **{k: _NUMBER for k in ("min", "q1", "median", "q3", "max")},
    },
    "additionalProperties": False,
}

METRIC_SET = {
    "type": "object",
    "required": ["rmse", "mse", "mae", "accuracy_pct"],
    "properties": {
        "rmse": {"type": "number", "minimum": 0},
        "mse": {"type": "number", "minimum": 0},
        "mae": {"type": "number", "minimum": 0},
        "accuracy_pct": {"type": "number", "minimum": 0, "maximum": 100},
        "cv": CV_SUMMARY,
    },
    "additionalProperties": False,
}

METRICS_DOC = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "evaluate output",
    "type": "object",
    "required": ["model", "test_samples", "test_start", "test_end", "metrics"],
    "properties": {
        "model": {"enum": _KINDS},
        "test_samples": {"type": "integer", "minimum": 1},
        "test_start": _MONTH,
        "test_end": _MONTH,
        "metrics": METRIC_SET,
    },
    "additionalProperties": False,
}

EVAL_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "compare output",
    "type": "object",
    "required": ["seed", "test_samples", "test_start", "test_end", "models"],
    "properties": {
        "seed": {"type": "integer"},
        "test_samples": {"type": "integer", "minimum": 1},
        "test_start": _MONTH,
        "test_end": _MONTH,
        "models": {"type": "object", "required": _KINDS,
                   "properties": {k: METRIC_SET for k in _KINDS},
                   "additionalProperties": False},
    },
    "additionalProperties": False,
}

CV_REPORT = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "crossval output",
    "type": "object",
    "required": ["folds", "seed", "fold_sizes", "models"],
    "properties": {
        "folds": {"type": "integer", "minimum": 2},
        "seed": {"type": "integer"},
        "fold_sizes": {"type": "array", "items": {"type": "integer", "minimum": 1}},
        "models": {"type": "object", "required": _KINDS,
                   "properties": {k: {"type": "object", "required": ["cv"],
                                      "properties": {"cv": CV_SUMMARY},
                                      "additionalProperties": False} for k in _KINDS},
                   "additionalProperties": False},
    },
    "additionalProperties": False,
}
