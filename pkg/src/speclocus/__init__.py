"""Daylight specular-point locus toolkit.

Calibrates a camera's Planckian illuminant line in projected log-chromaticity
space, then uses it to estimate scene illuminants, relight images along the
locus, and strip specular highlights. A built-in spectral renderer supplies
exact ground truth for verification.
"""

from .calib import (
    CalibObservation,
    LocusParams,
    calibrate,
    lms_line_fit,
    light_change_direction,
    load_profile,
    save_profile,
    synthetic_observations,
    two_light_solve,
)
from .chroma import (
    CANONICAL_BASIS,
    ChromaImage,
    ChromaVec,
    ProjectionBasis,
    U_BASIS,
    chroma_image,
    geomean_chroma,
    l1_chroma,
    locus_to_l1,
    rho_to_chi,
)
from .errors import (
    CoverageError,
    DegenerateDataError,
    DegenerateSensorError,
    IllConditionedWarning,
    ImageFormatError,
    InconsistentDataWarning,
    InsufficientDataError,
    InvalidArgumentError,
    SingularSystemError,
    SpecLocusError,
)
from .illum import (
    IlluminantEstimate,
    LrcField,
    angular_error,
    estimate_zeta_free,
    estimate_zeta_locus,
    grey_edge,
    grey_world,
    white_patch,
    zeta_field,
)
from .imaging import (
    LightSpec,
    PhongSpec,
    RenderedImage,
    SceneSpec,
    Sphere,
    psnr,
    render,
    three_sphere_scene,
)
from .matte import (
    MatteResult,
    PolarChroma,
    angular_project,
    inpaint_near_specular,
    matte_image,
)
from .relight import RelightSpec, relight, temperature_sweep
from .spectra import (
    BandConstants,
    SensorSet,
    SpectralCurve,
    band_constants,
    colorchecker_reflectance,
    d65_spd,
    effective_reflectance,
    gaussian_sensors,
    light_factors,
    planckian_spd,
)

__version__ = "0.1.0"
