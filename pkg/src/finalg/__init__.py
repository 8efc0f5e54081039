"""Workbench for finite algebras given by operation tables."""
from __future__ import annotations

from .algebra import (
    AlgebraFormatError,
    App,
    CapExceeded,
    Const,
    FiniteAlgebra,
    FiniteFunction,
    Operation,
    Term,
    Var,
    essential_arity,
    eval_term,
    parse_algebra,
    term_table,
)
from .catalog import example_names, load_example
from .clones import (
    ClosureResult,
    SpectrumCount,
    additive_structure,
    free_spectrum,
    polynomial_functions,
    term_functions,
)
from .congruence import (
    CentralSeries,
    Congruence,
    central_series,
    commutator,
    congruence_lattice,
    lattice_height,
    lower_central_series,
    maximal_congruence_chain,
    nilpotency_class,
    one_congruence,
    principal_congruence,
    quotient_algebra,
    zero_congruence,
)
from .expansion import (
    ExpandedAlgebra,
    ExpansionReport,
    PipelineResult,
    expand_pipeline,
    expand_with_group,
    verify_expansion,
)
from .fields import FiniteField, finite_field
from .malcev import (
    MalcevWitness,
    check_plus_properties,
    find_malcev_term,
    plus_minus_o,
    zero_block_group,
)
from .polyclone import (
    FieldPolynomial,
    PolySet,
    additive_span,
    homovariate_component,
    homovariate_generators,
    homovariate_parts,
    induced_function,
    interpolate,
    linear_substitutions,
    parse_polynomial,
    set_product,
    substitution_closure,
    verify_homovariate_split,
)
from .supernil import (
    AbsorbingArityReport,
    AbsorbingSurvey,
    SpectrumProbe,
    SupernilReport,
    absorbing_arity_check,
    absorbing_survey,
    check_supernilpotent,
    commutator_term_check,
    commutator_term_survey,
    is_absorbing,
    log_height_bound,
    spectrum_degree_probe,
    supernilpotency_bound,
    term_condition_falsify,
)

__all__ = [
    "AbsorbingArityReport",
    "AbsorbingSurvey",
    "AlgebraFormatError",
    "App",
    "CapExceeded",
    "CentralSeries",
    "ClosureResult",
    "Congruence",
    "Const",
    "ExpandedAlgebra",
    "ExpansionReport",
    "FieldPolynomial",
    "FiniteAlgebra",
    "FiniteField",
    "FiniteFunction",
    "MalcevWitness",
    "Operation",
    "PipelineResult",
    "PolySet",
    "SpectrumCount",
    "SpectrumProbe",
    "SupernilReport",
    "Term",
    "Var",
    "absorbing_arity_check",
    "absorbing_survey",
    "additive_span",
    "additive_structure",
    "central_series",
    "check_plus_properties",
    "check_supernilpotent",
    "commutator",
    "commutator_term_check",
    "commutator_term_survey",
    "congruence_lattice",
    "essential_arity",
    "eval_term",
    "example_names",
    "expand_pipeline",
    "expand_with_group",
    "find_malcev_term",
    "finite_field",
    "free_spectrum",
    "homovariate_component",
    "homovariate_generators",
    "homovariate_parts",
    "induced_function",
    "interpolate",
    "is_absorbing",
    "lattice_height",
    "linear_substitutions",
    "load_example",
    "log_height_bound",
    "lower_central_series",
    "maximal_congruence_chain",
    "nilpotency_class",
    "one_congruence",
    "parse_algebra",
    "parse_polynomial",
    "plus_minus_o",
    "polynomial_functions",
    "principal_congruence",
    "quotient_algebra",
    "set_product",
    "spectrum_degree_probe",
    "substitution_closure",
    "supernilpotency_bound",
    "term_condition_falsify",
    "term_functions",
    "term_table",
    "verify_expansion",
    "verify_homovariate_split",
    "zero_block_group",
    "zero_congruence",
]

__version__ = "0.1.0"
