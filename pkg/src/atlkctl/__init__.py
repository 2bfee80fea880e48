"""Translation of epistemic ATL with perfect recall into CTL with distributed
knowledge, plus a bounded-horizon semantic oracle over interpreted systems."""

from atlkctl.extract import CtlStructure, ExtractionError, extract_is_from_ctl_model
from atlkctl.formula import (
    Atom,
    CoopNext,
    CoopUntil,
    DKnows,
    DualCoopUntil,
    ExistsNext,
    ExistsUntil,
    Falsum,
    ForallUntil,
    Formula,
    Fragment,
    Implies,
    classify,
    coalitions_of,
    props_of,
    substitute,
)
from atlkctl.grammar import FormulaSyntaxError, parse, render
from atlkctl.modelio import ModelFormatError, parse_model, serialize_model
from atlkctl.oracle import (
    Evaluator,
    Verdict,
    enumerate_strategies,
    holds,
    lfp_until,
    outcomes,
    sat_at_initial,
)
from atlkctl.system import (
    InterpretedSystem,
    LocalRun,
    Run,
    build_is_act,
    equivalence_class,
    indistinguishable,
    project,
    runs_up_to,
    successor,
    validate,
)
from atlkctl.translator import (
    Mode,
    TranslationContext,
    TranslationError,
    TranslationResult,
    build_A,
    eliminate_next,
    eliminate_until,
    eliminate_until_complete,
    translate,
)

