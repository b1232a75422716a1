"""Rendering for optimizer convergence studies.

Consumes only the CSV contracts of the analysis package: sweep grids
(``param1,param2,kingma,ours,converged,color``) and trajectories
(``t,w_*,m_*,v_*,dist_to_min``). Never recomputes dynamics.
"""

from .render import (
    COLOR_RGB,
    SchemaError,
    read_sweep_csv,
    read_trajectory_csv,
    render_region,
    render_trajectory,
)

__version__ = "1.0.0"

__all__ = [
    "COLOR_RGB",
    "SchemaError",
    "read_sweep_csv",
    "read_trajectory_csv",
    "render_region",
    "render_trajectory",
]
