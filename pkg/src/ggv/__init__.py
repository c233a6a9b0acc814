"""Gradual GV: typechecker, cast insertion and simulator for a gradually
session-typed functional language."""

from .types import *  # noqa: F401,F403
from .relations import (  # noqa: F401
    consistent, consistent_sub, join, match_case, match_fun, match_prod, match_recv,
    match_select, match_send, meet, mult_sub, neg_sub, pos_sub, precision, sub,
)
from .parser import parse_expr, parse_program, parse_type  # noqa: F401
from .typer import GGVTypeError, check_program, tcexp  # noqa: F401
from .elaborate import erase, insert_casts, smart_cast  # noqa: F401
from .syntax import flv  # noqa: F401
from .internal import Configuration, is_value, safe_for, tc_config, tc_internal  # noqa: F401
from .runtime import detect_error, enumerate_redexes, gc_scan, run, step_config, step_expr  # noqa: F401
from .embed import check_embedding, embed  # noqa: F401
