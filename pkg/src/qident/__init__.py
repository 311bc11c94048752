"""qident: exact truncated q-series arithmetic and identity verification."""

from .catalog import (
    Identity,
    ParamOutOfRange,
    UnknownKey,
    default_instances,
    get_identity,
    list_identities,
    specialize_to_one,
    verify_identity,
)
from .ctengine import (
    ProofReplayError,
    ZFactor,
    ZSeries,
    expand_zfactors,
    jtp_zseries,
    prove_main_theorem,
    verify_zcoeff_identity,
    z_extract,
    zmul,
)
from .qfactorial import (
    INF,
    FactorSpec,
    NotTruncatable,
    ProductSpec,
    ZeroDivisor,
    expand_product_spec,
    poch_finite,
    poch_infinite,
    poch_recip_finite,
)
from .qring import (
    Monomial,
    NotInvertible,
    QSeriesError,
    QueryBeyondOrder,
    Series,
    TruncationUnsound,
    parse_series,
    series_add,
    series_coeff,
    series_invert,
    series_mul,
    series_rescale_base,
)
from .report import VerificationReport, compare_series, find_first_mismatch
from .speclang import (
    IdentityAST,
    LoweringError,
    ParseError,
    lower_expression,
    parse_expression,
    parse_file,
    parse_identity,
    serialize_identity,
    validate_identity,
)
from .summation import (
    AffineForm,
    DenomFactor,
    DomainError,
    EnumerationCapped,
    QuadForm,
    SumSpec,
    enumerate_support,
    eval_sum,
    eval_sum_scaled,
    make_sum_spec,
)

__version__ = "0.1.0"

__all__ = [
    "AffineForm",
    "DenomFactor",
    "DomainError",
    "EnumerationCapped",
    "FactorSpec",
    "INF",
    "Identity",
    "IdentityAST",
    "LoweringError",
    "Monomial",
    "NotInvertible",
    "NotTruncatable",
    "ParamOutOfRange",
    "ParseError",
    "ProductSpec",
    "ProofReplayError",
    "QSeriesError",
    "QuadForm",
    "QueryBeyondOrder",
    "Series",
    "SumSpec",
    "TruncationUnsound",
    "UnknownKey",
    "VerificationReport",
    "ZFactor",
    "ZSeries",
    "ZeroDivisor",
    "compare_series",
    "default_instances",
    "enumerate_support",
    "eval_sum",
    "eval_sum_scaled",
    "expand_product_spec",
    "expand_zfactors",
    "find_first_mismatch",
    "get_identity",
    "jtp_zseries",
    "list_identities",
    "lower_expression",
    "make_sum_spec",
    "parse_expression",
    "parse_file",
    "parse_identity",
    "parse_series",
    "poch_finite",
    "poch_infinite",
    "poch_recip_finite",
    "prove_main_theorem",
    "serialize_identity",
    "series_add",
    "series_coeff",
    "series_invert",
    "series_mul",
    "series_rescale_base",
    "specialize_to_one",
    "validate_identity",
    "verify_identity",
    "verify_zcoeff_identity",
    "z_extract",
    "zmul",
]
