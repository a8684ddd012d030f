"""Helpers shared by the scenario runners: law fits over run frames and results files."""

import json
import logging
import os
from typing import Dict, Optional

import numpy as np
import pandas as pd

from pipeline.files import atomic_write_text
from scaling.errors import ScalingError
from scaling.fitting import FitPoint, fit_joint_law, fit_power_law

logger = logging.getLogger(__name__)


def data_size_law(runs: pd.DataFrame, column: str) -> Optional[Dict]:
    """Power law over the seed-averaged column along train_pairs; None when no law fits"""
    means = runs.groupby('train_pairs', sort=True)[column].mean()
    try:
        report = fit_power_law([FitPoint(float(s), float(v)) for s, v in means.items()])
    except ScalingError as e:
        logger.warning("No %s data-size law: %s", column, e)
        return None
    return {**report.law.coefficients(), 'r_squared': report.r_squared}


def model_size_law(runs: pd.DataFrame, column: str) -> Optional[Dict]:
    """Power law along model size at the largest train_pairs value"""
    largest = runs[runs['train_pairs'] == runs['train_pairs'].max()]
    means = largest.groupby('model_size', sort=True)[column].mean()
    try:
        report = fit_power_law([FitPoint(float(s), float(v)) for s, v in means.items()])
    except ScalingError as e:
        logger.warning("No %s model-size law: %s", column, e)
        return None
    return {**report.law.coefficients(), 'r_squared': report.r_squared}


def joint_law(runs: pd.DataFrame, column: str):
    """FitReport of a joint law over the (model_size, train_pairs) grid, or None"""
    means = runs.groupby(['model_size', 'train_pairs'], sort=True)[column].mean()
    try:
        return fit_joint_law([(float(f), float(d), float(v)) for (f, d), v in means.items()])
    except ScalingError as e:
        logger.warning("No %s joint law: %s", column, e)
        return None


def _jsonable(value):
    if isinstance(value, np.generic):
        return value.item()
    raise TypeError(f"{type(value).__name__} is not JSON serializable")


def save_results(results: Dict, results_dir: str, filename: str) -> str:
    """Atomically write a scenario's results JSON"""
    filepath = os.path.join(results_dir, filename)
    atomic_write_text(filepath, json.dumps(results, indent=2, default=_jsonable) + "\n")
    logger.info("✓ Results saved to %s", filepath)
    return filepath
