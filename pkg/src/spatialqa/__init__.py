"""spatialqa: spatial-reasoning QA dataset generation and evaluation for
3D-annotated scenes."""

__version__ = "0.1.0"

from .scene import (  # noqa: F401
    CameraIntrinsics,
    CameraView,
    FrameKind,
    ObjectInstance,
    OrientedBox,
    ParseError,
    Pose,
    RelationKind,
    Scene,
    ValidationError,
    Vec3,
    load_scene,
    save_scene,
    validate_scene,
)
from .geometry import Hull2D, Ray, convex_hull, point_in_hull, project, ray_box_intersect  # noqa: F401
from .relations import SpatialRelation, evaluate_relation, extract_configuration  # noqa: F401
from .sampler import OccupancyGrid, build_occupancy, directional_region, sample_context, support_surfaces  # noqa: F401
from .fitting import FitQuery, check_fit, emit_compatibility  # noqa: F401
from .qa import QAPair, assemble, balance_binary, make_grounding, render_question  # noqa: F401
from .evaluation import EvalReport, evaluate, score_binary, score_points  # noqa: F401
from .config import RunConfig, load_config  # noqa: F401
