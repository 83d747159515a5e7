import json

from ._core import (
    ConfidenceRegion,
    Dataset,
    InvalidInput,
    ManifoldKind,
    NumericalFailure,
    Point,
    Rng,
    distance,
    exp_map,
    frechet_mean,
    gdp_delta_profile,
    log_map,
    mean_sensitivity,
    run_full_pipeline,
    sample_sphere_uniform_ball,
    sample_spd_tangent_uniform_ball,
    tangent_frame,
    vecd,
    vecd_inv,
    verify_privacy_profile,
)
from . import _core


def run_campaign(config):
    """Run a coverage campaign from a config dict; returns the report as a dict."""
    return json.loads(_core._run_campaign_json(json.dumps(config)))


__all__ = [
    "ConfidenceRegion",
    "Dataset",
    "InvalidInput",
    "ManifoldKind",
    "NumericalFailure",
    "Point",
    "Rng",
    "distance",
    "exp_map",
    "frechet_mean",
    "gdp_delta_profile",
    "log_map",
    "mean_sensitivity",
    "run_campaign",
    "run_full_pipeline",
    "sample_sphere_uniform_ball",
    "sample_spd_tangent_uniform_ball",
    "tangent_frame",
    "vecd",
    "vecd_inv",
    "verify_privacy_profile",
]
