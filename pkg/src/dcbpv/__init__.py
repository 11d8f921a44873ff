"""Dependently typed call-by-push-value toolkit."""
from .syntax import EffectSignature, Flags
from .parser import ParseError, parse, parse_program, parse_term, parse_type, pretty
from .kernel import (
    CannotSynth, Checker, Context, TypingError, check_comp, check_value,
    normalize_value, synth_comp, synth_value, types_equal, wf_context, wf_ctype,
    wf_vtype,
)

__version__ = "0.1.0"
