import os

import numpy as np
import pandas as pd

from config import kelly_config


def save_sweep_csv(frame, output_path, digits=kelly_config['csv_digits']):
    """Write a sweep table: '.' decimals, `digits` significant digits, LF endings, NaN as empty."""
    if frame.columns[0] != 'mu1':
        raise ValueError(f"Expected the first sweep column to be 'mu1', but got {frame.columns[0]!r}")
    if len(frame) < 2:
        raise ValueError(f"Expected at least 2 sweep rows, but got {len(frame)}")

    directory = os.path.dirname(output_path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    frame.to_csv(output_path, index=False, float_format=f"%.{digits}g", na_rep='', lineterminator='\n')
    print(f"Sweep data saved to {output_path}")


def load_sweep_csv(path):
    frame = pd.read_csv(path, dtype=np.float64)
    return frame
