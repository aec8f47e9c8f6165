"""JSON schemas of the documents written by the command-line tool."""

_num = {"type": "number"}
_matrix = {"type": "array", "items": {"type": "array", "items": _num}}
_regime = {"enum": ["localized", "critical", "strictly_delocalized"]}

CHARGE_SPEC = {
    "type": "object",
    "required": ["omega_plus", "omega_minus", "omega_zero", "omega_zero_tilde",
                 "p"],
    "properties": {
        "omega_plus": {"type": "array", "items": _num, "minItems": 1},
        "omega_minus": {"type": "array", "items": _num, "minItems": 1},
        "omega_zero": {"type": "array", "items": _num, "minItems": 1},
        "omega_zero_tilde": {"type": "array", "items": _num, "minItems": 1},
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "n_max": {"type": "integer", "minimum": 16},
    },
}

PHASE_SPEC = {
    "type": "object",
    "required": ["omega", "p"],
    "properties": {
        "omega": {"type": "array", "items": _num, "minItems": 1},
        "p": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 0.5},
        "n_max": {"type": "integer", "minimum": 16},
        "beta_grid": {"type": "string"},
        "h_grid": {"type": "string"},
    },
}

FREE_ENERGY = {
    "type": "object",
    "required": ["delta", "F", "rawF", "regime", "xi", "T", "h", "flipped"],
    "properties": {
        "delta": _num, "F": _num, "rawF": _num, "regime": _regime,
        "xi": {"type": "array", "items": _num}, "T": {"type": "integer"},
        "h": _num, "flipped": {"type": "boolean"},
        "ZatF": _num,
    },
}

CLASSIFY = {
    "type": "object",
    "required": ["regime", "delta", "P_less"],
    "properties": {"regime": _regime, "delta": _num,
                   "P_less": {"type": "boolean"}},
}

LIMITS = {
    "type": "object",
    "required": ["regime", "delta", "F", "rawF", "T", "warnings"],
    "properties": {
        "regime": _regime, "delta": _num, "F": _num, "rawF": _num,
        "T": {"type": "integer"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "LambdaC": _matrix, "LambdaF": _matrix, "muC": _matrix,
        "muF": _matrix,
        "vPlus": {"type": "array", "items": _num},
        "vMinus": {"type": "array", "items": _num},
        "P_less": {"type": "boolean"},
        "r": {"type": "array", "items": {
            "type": "object", "required": ["eta", "boundary", "r"],
            "properties": {"eta": {"type": "integer"},
                           "boundary": {"enum": ["free", "constrained"]},
                           "r": {"type": "number", "minimum": 0,
                                 "maximum": 1},
                           "at_endpoint": {"type": "boolean"}}}},
    },
}

ASYMPTOTICS = {
    "type": "object",
    "required": ["regime", "delta", "N", "checks"],
    "properties": {
        "regime": _regime, "delta": _num, "N": {"type": "integer"},
        "checks": {"type": "array", "items": {
            "type": "object", "required": ["name", "value"],
            "properties": {"name": {"type": "string"}, "value": _num,
                           "target": _num, "rel_error": _num}}},
    },
}

SAMPLE_SUMMARY = {
    "type": "object",
    "required": ["n_samples", "N", "seed", "contact_fraction",
                 "endpoint_mean", "endpoint_positive"],
    "properties": {
        "n_samples": {"type": "integer"}, "N": {"type": "integer"},
        "seed": {"type": "integer"}, "contact_fraction": _num,
        "endpoint_mean": _num, "endpoint_positive": _num,
        "endpoint_zero": _num, "sign_average": _num,
        "escaped_fraction": _num, "last_sign_positive": _num,
        "censored_fraction": _num, "boundary": {"type": "string"},
        "infinite": {"type": "boolean"},
    },
}

VERIFY = {
    "type": "object",
    "required": ["passed", "checks"],
    "properties": {
        "passed": {"type": "boolean"},
        "checks": {"type": "array", "items": {
            "type": "object", "required": ["name", "passed", "error", "tol"],
            "properties": {"name": {"type": "string"},
                           "passed": {"type": "boolean"},
                           "error": _num, "tol": _num}}},
    },
}

ERROR = {
    "type": "object",
    "required": ["error", "message"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}},
}

BY_COMMAND = {
    "free-energy": FREE_ENERGY,
    "classify": CLASSIFY,
    "limits": LIMITS,
    "asymptotics": ASYMPTOTICS,
    "sample": SAMPLE_SUMMARY,
    "verify": VERIFY,
}
