# Copyright 2026 The vidcus Authors
# SPDX-License-Identifier: Apache-2.0
"""Desk-scale subject-driven video customization toolkit."""

from vidcus._vidcus import (
    VidcusError,
    dynamic_degree,
    fm_loss,
    generate,
    inspect_plan,
    load_dataset,
    plucker,
    sample_lottery,
    sample_lottery_many,
    temporal_consistency,
    temporal_positions,
    text_alignment,
    train,
)

__all__ = [
    "VidcusError",
    "dynamic_degree",
    "fm_loss",
    "generate",
    "inspect_plan",
    "load_dataset",
    "plucker",
    "sample_lottery",
    "sample_lottery_many",
    "temporal_consistency",
    "temporal_positions",
    "text_alignment",
    "train",
]
