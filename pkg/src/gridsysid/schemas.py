"""JSON Schemas (draft 2020-12) for every JSON document the toolkit reads or writes.

The same schemas are published as files under ``docs/schemas``.
"""
from __future__ import annotations

__all__ = ["SCHEMAS"]

_DRAFT = "https://json-schema.org/draft/2020-12/schema"

_number_list = {"type": "array", "items": {"type": "number"}}
_nonempty_list = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_complex_list = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "number"}, "minItems": 2, "maxItems": 2},
}
_order = {"type": "integer", "minimum": 0, "maximum": 5}


def _obj(properties, required=None, **extra):
    return {"type": "object", "properties": properties,
            "required": sorted(properties) if required is None else required,
            "additionalProperties": False, **extra}


CONTINUOUS_TF = _obj({"num": _nonempty_list, "den": _nonempty_list})

ARX_MODEL = _obj({
    "n": {"type": "integer", "minimum": 1, "maximum": 5},
    "m": _order,
    "structure": {"enum": ["arx", "bilinear"]},
    "a": _number_list,
    "b": _number_list,
    "ts": {"type": "number", "exclusiveMinimum": 0},
    "noise_variance": {"type": "number", "minimum": 0},
    "covariance": {"type": "array", "items": _number_list},
})

FIT_SCORE = _obj({"nrmse": {"type": "number"}, "fit_percent": {"type": "number"},
                  "rss": {"type": "number", "minimum": 0}, "rows": {"type": "integer", "minimum": 2}})

FPE_SCORE = _obj({"fpe": {"type": "number", "minimum": 0}, "d": {"type": "integer", "minimum": 1},
                  "n_samples": {"type": "integer", "minimum": 2}})

FIT_REPORT = _obj(
    {
        "n": {"type": "integer", "minimum": 1}, "m": _order, "d": {"type": "integer", "minimum": 1},
        "error": {"type": ["string", "null"]},
        "arx": ARX_MODEL, "continuous": CONTINUOUS_TF, "continuous_text": {"type": "string"},
        "train_fit": FIT_SCORE, "test_fit": FIT_SCORE, "fpe": FPE_SCORE,
        "fpe_floor": {"type": "number", "minimum": 0}, "stable": {"type": "boolean"}, "poles": _complex_list, "zeros": _complex_list,
        "gain": {"type": "number"},
    },
    required=["n", "m", "d", "error"],
)

EXCITATION = _obj(
    {
        "kind": {"enum": ["step_sequence", "prbs", "multistep"]},
        "levels": _number_list,
        "switch_times": _number_list,
        "prbs_bit_period": {"type": "number", "exclusiveMinimum": 0},
        "amplitude": {"type": "number"},
    },
    required=["kind"],
)

SCENARIO = _obj(
    {
        "plant": CONTINUOUS_TF,
        "ts": {"type": "number", "exclusiveMinimum": 0},
        "duration": {"type": "number", "exclusiveMinimum": 0},
        "excitation": EXCITATION,
        "noise_std": {"type": "number", "minimum": 0},
        "mode": {"enum": ["envelope", "waveform"]},
        "carrier_hz": {"type": "number", "exclusiveMinimum": 0},
        "operating_point": _obj({"v0": {"type": "number"}, "i0": {"type": "number"}}, required=[]),
        "seed": {"type": "integer"},
    },
    required=[],
)

PREPROCESS = _obj(
    {
        "median_window": {"type": "integer", "minimum": 1},
        "rms_window": {"type": "integer", "minimum": 1},
        "detrend": {"type": "boolean"},
        "demean": {"type": "boolean"},
        "split_fraction": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
    },
    required=[],
)

_range = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

SWEEP = _obj(
    {"n_range": _range, "m_range": {"oneOf": [_range, {"type": "null"}]},
     "selection": {"enum": ["best_test_fit", "best_fpe"]}},
    required=[],
)

SUMMARY = _obj({
    "selection": {"enum": ["best_test_fit", "best_fpe"]},
    "rows": {"type": "array", "items": _obj(
        {
            "rank": {"type": "integer", "minimum": 1},
            "model_order": _obj({"n": {"type": "integer"}, "m": {"type": "integer"}}),
            "error": {"type": ["string", "null"]},
            "model_coefficients": CONTINUOUS_TF,
            "fit_to_training_data": {"type": "number"},
            "fit_to_test_data": {"type": "number"},
            "fpe": {"type": "number"},
        },
        required=["rank", "model_order", "error"],
    )},
})

MANIFEST = _obj({
    "command": {"enum": ["emulate", "fit", "sweep", "plot"]},
    "tool_version": {"type": "string"},
    "inputs": {"type": "object", "additionalProperties": {"type": "string"}},
    "config": {"type": "object"},
    "seed": {"type": ["integer", "null"]},
    "outputs": {"type": "array", "items": {"type": "string"}},
    "wall_time_s": {"type": "number", "minimum": 0},
})

#: name -> schema; the name is also the file stem under ``docs/schemas``
SCHEMAS = {
    "continuous_tf": CONTINUOUS_TF,
    "arx_model": ARX_MODEL,
    "fit_report": FIT_REPORT,
    "scenario": SCENARIO,
    "preprocess": PREPROCESS,
    "sweep": SWEEP,
    "summary": SUMMARY,
    "manifest": MANIFEST,
}

for _name, _schema in SCHEMAS.items():
    SCHEMAS[_name] = {"$schema": _DRAFT, "title": _name, **_schema}
