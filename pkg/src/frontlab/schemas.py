"""JSON Schemas for every JSON artifact the CLI emits."""

_NUM = {"type": "number"}
_STR = {"type": "string"}
_NUM_ARRAY = {"type": "array", "items": _NUM}

ANALYSIS = {
    "type": "object",
    "required": ["potential", "minima", "critical_points", "lam_min",
                 "lam_max", "d_esc", "delta_v", "q_hull", "r_att_inf",
                 "eps_coerc", "r_coerc", "r_probe"],
    "properties": {
        "potential": {"type": "object"},
        "minima": {"type": "array", "items": {
            "type": "object",
            "required": ["location", "eigenvalues", "value"],
            "properties": {"location": _NUM_ARRAY,
                           "eigenvalues": _NUM_ARRAY,
                           "value": _NUM},
        }},
        "critical_points": {"type": "array", "items": {
            "type": "object",
            "required": ["location", "eigenvalues", "kind", "value"],
            "properties": {"kind": {"enum": ["minimum", "saddle", "maximum"]}},
        }},
        "lam_min": _NUM, "lam_max": _NUM, "d_esc": _NUM, "delta_v": _NUM,
        "q_hull": _NUM, "r_att_inf": _NUM, "eps_coerc": _NUM,
        "r_coerc": _NUM, "r_probe": _NUM,
    },
}

FRONT_INDEX = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["file", "c", "s", "m_minus", "m_plus"],
        "properties": {"file": _STR, "c": _NUM, "s": _NUM,
                       "m_minus": _NUM, "m_plus": _NUM},
    },
}

PROFILE_META = {
    "type": "object",
    "required": ["c", "s", "alpha", "m_minus", "m_plus", "xi0", "residual"],
    "properties": {"c": _NUM, "s": _NUM, "alpha": _NUM,
                   "m_minus": _NUM_ARRAY, "m_plus": _NUM_ARRAY,
                   "xi0": _NUM, "residual": _NUM},
}

TERRACE_FIT = {
    "type": "object",
    "oneOf": [
        {"required": ["error"]},
        {
            "required": ["passed", "global_residual", "front_residuals",
                         "speed_residuals", "measured_speeds", "terrace"],
            "properties": {
                "passed": {"type": "boolean"},
                "global_residual": _NUM,
                "front_residuals": _NUM_ARRAY,
                "speed_residuals": _NUM_ARRAY,
                "measured_speeds": _NUM_ARRAY,
                "terrace": {"oneOf": [{"type": "null"}, {
                    "type": "object",
                    "required": ["direction", "q", "minima", "c", "s", "x0"],
                    "properties": {
                        "direction": {"enum": ["left", "right"]},
                        "q": {"type": "integer"},
                        "minima": {"type": "array", "items": _NUM_ARRAY},
                        "c": _NUM_ARRAY, "s": _NUM_ARRAY, "x0": _NUM_ARRAY,
                    },
                }]},
            },
        },
    ],
}

CENTER = {
    "type": "object",
    "required": ["h", "eps"],
    "properties": {
        "h": _NUM,
        "eps": {"type": "object", "additionalProperties": {
            "type": "object",
            "required": ["dissipation_tail", "residual_tail"],
        }},
    },
}

FRAMES = {
    "type": "object",
    "additionalProperties": {
        "type": "array",
        "items": {
            "type": "object",
            "required": ["s", "E", "dE_ds", "D", "F", "Q", "G", "norm_log"],
        },
    },
}

RUN = {
    "type": "object",
    "required": ["scenario", "dt", "aborted", "snapshots"],
    "properties": {"scenario": _STR, "dt": _NUM, "aborted": _STR,
                   "snapshots": {"type": "integer"}},
}

VERIFY = {
    "type": "array",
    "items": {
        "type": "object",
        "required": ["cid", "name", "passed", "measured", "expected",
                     "runtime"],
        "properties": {"cid": {"type": "integer"},
                       "passed": {"type": "boolean"}},
    },
}
