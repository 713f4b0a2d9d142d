"""Perspective-n-Point solvers on normalized image coordinates."""

from ..errors import ConfigError
from ._common import METHODS, PnPSolution, normalize_image, reprojection_rms, solution_to_pose
from .epnp import epnp
from .homography import apply_homography, homography_dlt
from .ippe import ippe
from .refine import refine_gauss_newton
from .rpnp import rpnp

SOLVERS = ("epnp", "epnp+gn", "ippe", "rpnp")


def solve(method, world, image, h_ap=1.0, prior_gamma=None, refine=False):
    """Dispatch to a solver by name. ``epnp+gn`` is EPnP followed by refinement."""
    if method == "epnp+gn":
        method, refine = "epnp", True
    if method == "epnp":
        sol = epnp(world, image, h_ap=h_ap, prior_gamma=prior_gamma)
    elif method == "ippe":
        sol = ippe(world, image, h_ap=h_ap, prior_gamma=prior_gamma)[0]
    elif method == "rpnp":
        sol = rpnp(world, image, h_ap=h_ap, prior_gamma=prior_gamma)
    else:
        raise ConfigError(f"unknown solver {method!r}; choose from {SOLVERS}", key="solver")
    if refine:
        sol = refine_gauss_newton(sol, world, image, h_ap=h_ap)
    return sol


__all__ = [
    "METHODS", "SOLVERS", "PnPSolution", "apply_homography", "epnp", "homography_dlt", "ippe",
    "normalize_image", "refine_gauss_newton", "reprojection_rms", "rpnp", "solution_to_pose", "solve",
]
