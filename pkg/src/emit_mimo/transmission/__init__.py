"""
傳輸模組 - Transmission Module

模態功率分配與 BPSK Monte-Carlo 影像傳輸。
"""

from emit_mimo.transmission.txsim import (
    AllocationResult,
    LinkConfig,
    TransmissionResult,
    allocate_power,
    transmit_image,
)

__all__ = [
    "AllocationResult",
    "LinkConfig",
    "TransmissionResult",
    "allocate_power",
    "transmit_image",
]
