"""relsim: a finite-model workbench for relation liftings and coalgebraic (bi)simulation."""

from .finrel import (
    CarrierMismatch,
    Cospan,
    FinFun,
    FinRel,
    FinSet,
    Span,
    compose,
    converse,
    difunctional_closure,
    empty_rel,
    finset,
    full_rel,
    identity_rel,
    image_factorization,
    intersection,
    is_difunctional,
    is_weak_pullback,
    leq,
    pullback,
    pushout,
    subidentity_from_subset,
    tabulation,
    union,
)
from .functors import (
    Comp,
    Const,
    Exp,
    FunctorExpr,
    Id,
    MVal,
    MonoidTable,
    Pow,
    Prod,
    SizeBoundExceeded,
    Sum,
    apply_map,
    apply_obj,
    check_pullback_preservation,
    is_positive,
    preservation_profile,
)
from .relators import (
    Barr,
    CoBarr,
    CompOf,
    EgliMilnerHalf,
    PointwiseInf,
    PointwiseSup,
    ProdOf,
    RelatorConstructionError,
    SubmonoidExp,
    SumOf,
    UpToDifunctional,
    cobarr_equals_barr_of_closure,
    difunctional_functoriality,
    functor_of,
    is_lax_extension,
    is_normal,
    is_relational_connector,
    lift,
    preserves_converses,
)
from .submonoids import (
    NLELattice,
    UCSubmonoid,
    all_uc_submonoids,
    enumerate_nle,
    generate,
    greatest_nle,
    is_normal_endorelation,
    join,
    normal_via_cospans,
)
from .bisim import (
    Coalgebra,
    behavioural_equivalence,
    coalgebra_from_json,
    coalgebra_from_values,
    coalgebra_to_json,
    is_simulation,
    minimal_witness,
    random_coalgebra,
    similarity,
    soundness_completeness_report,
)
from .lts import (
    LTS,
    TwistedSpec,
    final_example_lts,
    is_twisted_bisimulation_clausal,
    linear_witness,
    lts_from_json,
    lts_to_json,
    minimization_family,
    standard_relator,
    submonoid_top,
    to_coalgebra,
    twisted_relator,
)
from .submonoids import s_of_relator

__version__ = "0.1.0"
