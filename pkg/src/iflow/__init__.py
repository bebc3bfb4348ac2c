"""iflow: a static information-flow checker for a small WHILE language.

The analysis has two cooperating parts: a program transformation that
introduces fresh variable copies at bracketed assignments (removing the
false dataflow dependencies that make fixed-label checking imprecise), and
a fixed-label type system whose labels may depend on run-time values.  A
differential-execution harness validates the implementation against the
semantics at desk scale.
"""

from .errors import (
    AnalysisError,
    ConfigError,
    EvalError,
    IflowError,
    InternalError,
    ParseError,
)
from .labels import (
    Cond,
    Join,
    Label,
    Level,
    Meet,
    env_wellformed,
    label_eval,
    label_free_vars,
    low_equiv,
    project_env,
    project_memory,
)
from .lang import Assign, BinOp, BracketAssign, Cmd, Expr, If, Lit, Seq, Skip, Var, While, eval_expr
from .lattice import Lattice, two_point
from .parser import LabelFile, ParsedProgram, parse_labels, parse_lattice, parse_program
from .pretty import render_cmd, render_expr, render_label, render_program
from .interp import Config, RunError, StepLimit, Terminated, erasure_run, run, step
from .transform import bracket_all, base_of, phi_merge, set_assign, transform_cmd, transform_expr, transform_program
from .analysis import build_cfg, liveness, predicates
from .typecheck import CheckOptions, CheckReport, check_program, discharge_obligation, type_of_expr
from .hs import construct_env, hs_check, verify_construction
from .harness import GenConfig, NiTrialReport, gen_equiv_pair, gen_program, ni_test

__version__ = "0.1.0"
