"""Self-embedding fragile watermarking: embed, detect, localize, recover.

The embedding hides two watermarks in the 2 LSBs of every 2x2 block of a
grayscale image: a keyed 2-bit authentication tag of the block itself and
an encrypted 6-bit digest of the block's content stored in a distant
partner block. Verification localizes tampering block by block;
recovery rebuilds tampered blocks from their surviving partners.
"""

from .analysis import (
    RecoveryProfile,
    TheoryParams,
    average_recovery_rate,
    block_recovery_rate_exact,
    closed_form_block_rate,
    closed_form_ud,
    position_sweep,
    random_tamper_rate,
    superiority_margin,
)
from .codec import KeySet, generate_keyset, read_key_file, write_key_file
from .errors import (
    DimensionError,
    FragmarkError,
    KeyFileError,
    MappingConstructionError,
    ParameterError,
    RateUndefinedError,
)
from .experiment import (
    ExperimentCell,
    ExperimentPlan,
    PlanResult,
    TrialRecord,
    apply_random_tamper,
    apply_square_tamper,
    mapping_survival_trials,
    psnr,
    random_tamper_trials,
    run_plan,
    synthetic_image,
    synthetic_suite,
)
from .image_io import read_image, write_block_mask, write_image
from .image_model import BlockGrid, BlockIndex, GrayImage, TamperMap, TamperRegion
from .mapping import (
    ARNOLD,
    DENEIGHBORHOOD,
    OFFSET,
    RANDOM,
    STRATEGIES,
    BlockMapping,
    MappingReport,
    build_mapping,
    hall_feasible,
    verify_mapping,
)
from .protocol import (
    AuthenticationReport,
    RecoveryResult,
    WatermarkedImage,
    authenticate,
    embed,
    measure_recovery_rate,
    recover,
    report_summary,
)

__version__ = "0.1.0"

__all__ = [
    "ARNOLD",
    "AuthenticationReport",
    "BlockGrid",
    "BlockIndex",
    "BlockMapping",
    "DENEIGHBORHOOD",
    "DimensionError",
    "ExperimentCell",
    "ExperimentPlan",
    "FragmarkError",
    "GrayImage",
    "KeyFileError",
    "KeySet",
    "MappingConstructionError",
    "MappingReport",
    "OFFSET",
    "ParameterError",
    "PlanResult",
    "RANDOM",
    "RateUndefinedError",
    "RecoveryProfile",
    "RecoveryResult",
    "STRATEGIES",
    "TamperMap",
    "TamperRegion",
    "TheoryParams",
    "TrialRecord",
    "WatermarkedImage",
    "apply_random_tamper",
    "apply_square_tamper",
    "mapping_survival_trials",
    "random_tamper_trials",
    "authenticate",
    "average_recovery_rate",
    "block_recovery_rate_exact",
    "build_mapping",
    "closed_form_block_rate",
    "closed_form_ud",
    "embed",
    "generate_keyset",
    "hall_feasible",
    "measure_recovery_rate",
    "position_sweep",
    "psnr",
    "random_tamper_rate",
    "read_image",
    "read_key_file",
    "recover",
    "report_summary",
    "run_plan",
    "superiority_margin",
    "synthetic_image",
    "synthetic_suite",
    "verify_mapping",
    "write_block_mask",
    "write_image",
    "write_key_file",
]
