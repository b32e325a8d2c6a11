"""Compact hyperbolic Coxeter polytopes via their Coxeter diagrams."""

from .diagram import (
    DEFAULT_TOL,
    Angle,
    Diagram,
    DiagramError,
    Dotted,
    ParseError,
    UnknownWeightError,
    cos_pi_over,
    determinant,
    gram,
    parse_diagram,
    parse_dimension,
    serialize_diagram,
    signature,
)
from .classify import (
    DiagramClass,
    EllipticType,
    classify,
    elliptic_type,
    enumerate_elliptic_subdiagrams,
    has_parabolic_subdiagram,
    is_elliptic,
    is_lanner,
    max_elliptic_order,
)
from .localdet import d_pqr, loc_sum, local_det, triangle
from .bounds import (
    BoundSet,
    RefineResult,
    compute_bounds,
    n0_bound,
    n0_count,
    q0_bound,
    q1_bound,
    refine_k_bound,
)
from .enumerate import EnumConfig, ResourceCapError, enumerate_P
from .essential import (
    CatalogEntry,
    DissectionWitness,
    Verdict,
    double,
    find_dissections,
    load_catalog,
    save_catalog,
    sigma_odd,
    subgroup_filter,
    volume,
)
from ._canon import canonical_diagram, canonical_key, is_isomorphic
from .polytope import (
    PolytopeRecord,
    Rejection,
    VectorModel,
    combinatorial_check,
    face_diagram,
    is_polytope_diagram,
    reconstruct_vector,
    solve_dotted,
)

__version__ = "0.1.0"
