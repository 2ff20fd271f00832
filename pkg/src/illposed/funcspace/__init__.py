"""Function-space norms on the periodic grid and alpha-modulation machinery."""

from illposed.funcspace.covering import (
    BESOV_ALPHA1_C,
    EMBED_C,
    LEMFI_C,
    AlphaCovering,
    Bapu,
    Patch,
    alpha_mod_norm,
    audit_bapu,
    audit_covering,
    build_alpha_covering,
    build_bapu,
)
from illposed.funcspace.norms import (
    HOLDER_BESOV,
    HolderEstimate,
    NormSpec,
    besov_norm,
    holder_estimate,
    holder_norm,
    holder_seminorm_1d,
    lp_dyadic_windows,
    lp_norm,
    smooth_step,
    w1r_norm,
)

__all__ = [
    "BESOV_ALPHA1_C",
    "EMBED_C",
    "HOLDER_BESOV",
    "LEMFI_C",
    "AlphaCovering",
    "Bapu",
    "Patch",
    "alpha_mod_norm",
    "audit_bapu",
    "audit_covering",
    "build_alpha_covering",
    "build_bapu",
    "HolderEstimate",
    "NormSpec",
    "besov_norm",
    "holder_estimate",
    "holder_norm",
    "holder_seminorm_1d",
    "lp_dyadic_windows",
    "lp_norm",
    "smooth_step",
    "w1r_norm",
    "norm_csv_row",
]


def norm_csv_row(spec: NormSpec, value: float) -> list:
    """CSV row ``space, s, sigma, p, q, r, alpha, value`` (blank for unused)."""
    def fmt(v):
        return "" if v is None else repr(float(v))

    return [spec.space] + [fmt(getattr(spec, n)) for n in ("s", "sigma", "p", "q", "r", "alpha")] + [repr(float(value))]
