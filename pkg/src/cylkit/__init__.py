"""Workbench for finite Boolean algebras with operators.

Construction, manipulation, and brute-force verification of the finite
algebras of relations: colored-partition frames and their complex algebras,
two-parameter relation algebras with hypernetworks and hyperbases, atom
splitting over substitution-equipped tuple algebras, relation-algebra and
neat reducts, quasi-projection term schemes, and bounded representation,
isomorphism, and amalgamation search.
"""

from .core import (
    AtomStructure,
    CompositionRule,
    Element,
    FiniteBAO,
    Rel,
    Signature,
    Subalgebra,
    complex_algebra,
    generated_subalgebra,
    perm_group,
    product,
    transposition,
)
from .dimension import (
    CorrespondentReport,
    NeatReductResult,
    RaReductResult,
    RelativizeResult,
    ca_frame_correspondents,
    ca_reduct,
    dimension_set,
    drop_substitutions,
    neat_elements,
    neat_reduct,
    ra_atom_report,
    ra_reduct,
    reduct_rho,
    relativize,
)
from .errors import (
    CapExceededError,
    CylkitError,
    FrameMismatchError,
    ParseError,
    SignatureMismatchError,
    StructuralError,
)
from .hh import (
    HHAtom,
    Hypernetwork,
    NetworkFamily,
    base_embedding_atom_map,
    ca_of_hyperbasis,
    enumerate_hypernetworks,
    hh_algebra,
    hh_structure,
    is_hyperbasis,
    is_symmetric,
    restrict_family,
    verify_network,
    x_element,
)
from .monk import (
    MonkAtom,
    enumerate_monk_atoms,
    johnson_extension,
    monk_algebra,
    monk_relativizer,
    monk_structure,
)
from .morphisms import (
    AmalgamVerdict,
    MorphismWitness,
    amalgam_check,
    amalgam_search,
    check_homomorphism,
    find_isomorphism,
)
from .qra import (
    QraContext,
    QraTerms,
    build_width_algebra,
    check_quasiprojections,
    quasiprojection_search,
    suc_pred_roundtrip,
    trivial_qra,
)
from .setalg import (
    DirectedBase,
    RepresentationResult,
    classify_base,
    directed_set_algebra,
    full_set_algebra,
    representation_search,
)
from .splitting import (
    BlurResult,
    SplitSpec,
    blur,
    build_base,
    real_partition,
    rep_embedding,
    split_block,
    split_embedding,
    witness_term,
    witness_value,
)
from .terms import (
    Equation,
    Exhaustive,
    IndexInjection,
    Sampled,
    SchemaTemplate,
    Term,
    Verdict,
    ca_axioms,
    ca_schema,
    canonical_key,
    check_equation,
    check_variety,
    eta_plus,
    eval_term,
    instantiate_schema,
    parse_equation,
    parse_term,
    pea_axioms,
    pea_schema,
    to_text,
)
