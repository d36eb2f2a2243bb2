#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
SVG charts of emitted CSVs. The schema is detected from the header:
    response      t,final,final_norm,approx           -> line chart
    distribution  frame,q05,q25,median,q75,q95        -> box chart
    au summary    au_id,mse_pca,mse_full,mse_thresholded -> grouped bars
    weights       point,weight,distance,flipped       -> bars
"""

import os
from typing import List

import matplotlib

matplotlib.use('Agg')

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402

from src.errors import SchemaError  # noqa: E402
from src.logger import logger  # noqa: E402
from src.utils.exports import (  # noqa: E402
    AU_SUMMARY_COLUMNS,
    DISTRIBUTION_COLUMNS,
    RESPONSE_COLUMNS,
    WEIGHT_COLUMNS,
    read_table,
)

FIGURE_SIZE = (8.0, 4.5)
SVG_RC = {
    'svg.hashsalt': 'faceresp',
    'svg.fonttype': 'none',
    'font.family': 'DejaVu Sans',
}


def detect_schema(columns: List[str]) -> str:
    columns = list(columns)
    if columns == RESPONSE_COLUMNS:
        return 'response'
    if columns == DISTRIBUTION_COLUMNS:
        return 'distribution'
    if columns == AU_SUMMARY_COLUMNS:
        return 'au_summary'
    if columns == WEIGHT_COLUMNS:
        return 'weights'
    raise SchemaError(f"unrecognized CSV header: {','.join(map(str, columns))}")


def _response_chart(table: pd.DataFrame, ax) -> None:
    ax.plot(table['t'], table['final_norm'], color='tab:blue', label='final (normalized)')
    ax.plot(table['t'], table['approx'], color='tab:orange', linestyle='--', label='approximated')
    ax.set_xlabel('frame')
    ax.set_ylabel('intensity')
    ax.set_ylim(-0.05, 1.05)
    ax.legend(loc='upper right')


def _distribution_chart(table: pd.DataFrame, ax) -> None:
    stats = [{
        'med': row['median'], 'q1': row['q25'], 'q3': row['q75'],
        'whislo': row['q05'], 'whishi': row['q95'], 'fliers': [], 'label': str(int(row['frame'])),
    } for row in table.to_dict('records')]
    ax.bxp(stats, showfliers=False, widths=0.6)
    ax.set_xlabel('template frame')
    ax.set_ylabel('aligned response')
    step = max(1, len(stats) // 10)
    ax.set_xticks(np.arange(1, len(stats) + 1)[::step])
    ax.set_xticklabels([s['label'] for s in stats][::step])


def _au_summary_chart(table: pd.DataFrame, ax) -> None:
    positions = np.arange(len(table))
    width = 0.27
    for offset, column, label in ((-width, 'mse_pca', 'global PCA'), (0.0, 'mse_full', 'proposed (full)'),
                                  (width, 'mse_thresholded', 'proposed (thresholded)')):
        ax.bar(positions + offset, table[column].astype(float), width, label=label)
    ax.set_xticks(positions)
    ax.set_xticklabels(table['au_id'].astype(str))
    ax.set_ylabel('MSE')
    ax.legend(loc='upper right')


def _weights_chart(table: pd.DataFrame, ax) -> None:
    ax.bar(table['point'], table['weight'], color='tab:green')
    ax.set_xlabel('point')
    ax.set_ylabel('weight')
    ax.set_ylim(0, 1.05)


CHARTS = {
    'response': _response_chart,
    'distribution': _distribution_chart,
    'au_summary': _au_summary_chart,
    'weights': _weights_chart,
}


def plot_csv(csv_path: str, svg_path: str) -> str:
    """
    Render one CSV to a deterministic SVG.

    Returns:
        The detected schema name

    Raises:
        SchemaError: Unknown header
    """
    table = read_table(csv_path, [])
    schema = detect_schema(table.columns)
    with plt.rc_context(SVG_RC):
        fig, ax = plt.subplots(figsize=FIGURE_SIZE)
        try:
            CHARTS[schema](table, ax)
            ax.set_title(os.path.splitext(os.path.basename(csv_path))[0])
            fig.tight_layout()
            os.makedirs(os.path.dirname(os.path.abspath(svg_path)), exist_ok=True)
            fig.savefig(svg_path, format='svg', metadata={'Date': None})
        finally:
            plt.close(fig)
    logger.info(f"Plotted {csv_path} ({schema}) to {svg_path}")
    return schema
