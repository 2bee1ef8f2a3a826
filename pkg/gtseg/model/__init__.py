"""
GT U-Net model: configuration, layers, grouped attention and complexity.
"""
from gtseg.model.attention import MHSAWeights, group_merge, group_partition, mhsa_forward
from gtseg.model.complexity import ComplexityReport, complexity, count_mhsa_macs, verify_complexity
from gtseg.model.config import GTUNetConfig
from gtseg.model.gt_unet import GTBlock, GTUNet, gt_block_forward, gtunet_forward

__all__ = [
    "ComplexityReport",
    "GTBlock",
    "GTUNet",
    "GTUNetConfig",
    "MHSAWeights",
    "complexity",
    "count_mhsa_macs",
    "group_merge",
    "group_partition",
    "gt_block_forward",
    "gtunet_forward",
    "mhsa_forward",
    "verify_complexity",
]
