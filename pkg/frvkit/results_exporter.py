#!/usr/bin/env python3
"""
Results Exporter for FRVKit
CSV grids and eigenvalue clouds, JSON reports with integrity sidecars,
SVG figures and an optional PDF acceptance report
"""

import csv
import hashlib
import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, Optional, Sequence

import numpy as np

try:
    from .closed_models import CueSum, ModelSpec, cue_sum_cdf, model_border
    from .errors import ConfigHashMismatch
except ImportError:
    from closed_models import CueSum, ModelSpec, cue_sum_cdf, model_border
    from errors import ConfigHashMismatch

logger = logging.getLogger(__name__)

try:
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt
    MATPLOTLIB_AVAILABLE = True
except ImportError:
    MATPLOTLIB_AVAILABLE = False
    logger.warning("matplotlib not available - figure generation disabled")

try:
    from reportlab.lib import colors
    from reportlab.lib.pagesizes import A4
    from reportlab.lib.styles import ParagraphStyle, getSampleStyleSheet
    from reportlab.lib.units import inch
    from reportlab.platypus import Paragraph, SimpleDocTemplate, Spacer, Table, TableStyle
    REPORTLAB_AVAILABLE = True
except ImportError:
    REPORTLAB_AVAILABLE = False

GRID_COLUMNS = ['x', 'y', 'rho', 'reG', 'imG', 'negC', 'inside']
CLOUD_COLUMNS = ['re', 'im']


def format_float(value: float) -> str:
    """17 significant digits: parses back to the same double"""
    return f"{float(value):.17g}"


def file_sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b''):
            digest.update(chunk)
    return digest.hexdigest()


def sidecar_path(csv_path: str) -> str:
    return csv_path + '.json'


class ResultsExporter:
    """
    File emission for solve, sample, verify and acceptance runs
    """

    def __init__(self):
        self.has_matplotlib = MATPLOTLIB_AVAILABLE
        self.has_reportlab = REPORTLAB_AVAILABLE

    @staticmethod
    def _ensure_parent(path: str):
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)

    # CSV

    def export_grid_csv(self, rows: Sequence[Dict[str, Any]], output_path: str) -> int:
        """
        Write solution rows (SolutionPoint.to_dict or equivalent)

        Returns:
            Number of data rows written
        """
        self._ensure_parent(output_path)
        count = 0
        with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
            writer = csv.writer(csvfile, lineterminator='\n')
            writer.writerow(GRID_COLUMNS)
            for row in rows:
                writer.writerow([
                    format_float(row['x']),
                    format_float(row['y']),
                    format_float(row['rho']),
                    format_float(row['reG']),
                    format_float(row['imG']),
                    format_float(row['negC']),
                    'true' if row['inside'] else 'false',
                ])
                count += 1
        logger.info(f"grid CSV written: {output_path} ({count} rows)")
        return count

    def read_grid_csv(self, input_path: str) -> Dict[str, np.ndarray]:
        columns = {name: [] for name in GRID_COLUMNS}
        with open(input_path, 'r', newline='', encoding='utf-8') as csvfile:
            reader = csv.DictReader(csvfile)
            for row in reader:
                for name in GRID_COLUMNS[:-1]:
                    columns[name].append(float(row[name]))
                columns['inside'].append(row['inside'] == 'true')
        return {name: np.asarray(values) for name, values in columns.items()}

    def export_cloud_csv(self, points: np.ndarray, output_path: str) -> int:
        self._ensure_parent(output_path)
        points = np.asarray(points, dtype=complex)
        with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
            writer = csv.writer(csvfile, lineterminator='\n')
            writer.writerow(CLOUD_COLUMNS)
            for value in points:
                writer.writerow([format_float(value.real), format_float(value.imag)])
        logger.info(f"eigenvalue CSV written: {output_path} ({points.size} rows)")
        return int(points.size)

    def read_cloud_csv(self, input_path: str) -> np.ndarray:
        re_values, im_values = [], []
        with open(input_path, 'r', newline='', encoding='utf-8') as csvfile:
            reader = csv.DictReader(csvfile)
            if reader.fieldnames != CLOUD_COLUMNS:
                raise ValueError(f"{input_path}: expected columns {CLOUD_COLUMNS}, got {reader.fieldnames}")
            for row in reader:
                re_values.append(float(row['re']))
                im_values.append(float(row['im']))
        return np.asarray(re_values) + 1j * np.asarray(im_values)

    # Sidecars and JSON

    def write_sidecar(self, csv_path: str, config: Dict[str, Any], config_hash: str) -> Dict[str, Any]:
        record = {
            'config': config,
            'config_hash': config_hash,
            'data_sha256': file_sha256(csv_path),
            'created': datetime.now().isoformat(),
        }
        self.export_json(record, sidecar_path(csv_path))
        return record

    def read_sidecar(self, csv_path: str) -> Optional[Dict[str, Any]]:
        path = sidecar_path(csv_path)
        if not os.path.exists(path):
            return None
        with open(path, 'r', encoding='utf-8') as handle:
            return json.load(handle)

    def check_integrity(self, csv_path: str, expected_hash: Optional[str] = None) -> Dict[str, Any]:
        """
        Compare a cloud file with its sidecar

        Raises:
            ConfigHashMismatch: data digest or config hash differs
        """
        sidecar = self.read_sidecar(csv_path)
        if sidecar is None:
            raise ConfigHashMismatch(f"no sidecar for {csv_path}")
        actual = file_sha256(csv_path)
        if actual != sidecar.get('data_sha256'):
            raise ConfigHashMismatch(f"{csv_path}: data digest {actual[:12]} does not match sidecar "
                                     f"{str(sidecar.get('data_sha256'))[:12]}")
        if expected_hash is not None and expected_hash != sidecar.get('config_hash'):
            raise ConfigHashMismatch(f"{csv_path}: config hash {str(sidecar.get('config_hash'))[:12]} "
                                     f"does not match the requested configuration {expected_hash[:12]}")
        return sidecar

    def export_json(self, payload: Dict[str, Any], output_path: str) -> bool:
        self._ensure_parent(output_path)
        with open(output_path, 'w', encoding='utf-8', newline='\n') as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
            handle.write('\n')
        logger.info(f"JSON written: {output_path}")
        return True

    def export_validations_csv(self, results: Dict[str, Any], output_path: str) -> bool:
        """Flat table of every suite validation of an acceptance run"""
        try:
            self._ensure_parent(output_path)
            with open(output_path, 'w', newline='', encoding='utf-8') as csvfile:
                writer = csv.writer(csvfile, lineterminator='\n')
                writer.writerow(['suite', 'metric', 'status', 'actual', 'expected_max', 'description'])
                for suite_name, suite in results.get('results', {}).items():
                    for validation in suite.get('validations', []):
                        writer.writerow([
                            suite_name,
                            validation.get('metric', ''),
                            validation.get('status', ''),
                            validation.get('actual', ''),
                            validation.get('expected_max', ''),
                            validation.get('description', ''),
                        ])
            logger.info(f"CSV export completed: {output_path}")
            return True
        except OSError as e:
            logger.error(f"Error exporting to CSV: {e}")
            return False

    # Figures

    def plot_scatter(self, points: np.ndarray, model: ModelSpec, output_path: str,
                     title: Optional[str] = None) -> bool:
        """Eigenvalue scatter with the analytic border overlaid"""
        if not self.has_matplotlib:
            logger.error("matplotlib not available - cannot plot")
            return False
        self._ensure_parent(output_path)
        points = np.asarray(points)
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.scatter(points.real, points.imag, s=0.5, color='tab:blue', alpha=0.5, linewidths=0)
        for cx, cy in model_border(model).curves():
            ax.plot(cx, cy, color='tab:red', linewidth=1.2)
        ax.set_aspect('equal')
        ax.set_xlabel('Re z')
        ax.set_ylabel('Im z')
        ax.set_title(title or f"{model.label} ({points.size} eigenvalues)")
        fig.savefig(output_path, format='svg', bbox_inches='tight')
        plt.close(fig)
        logger.info(f"scatter plot written: {output_path}")
        return True

    def plot_radial(self, points: np.ndarray, model: ModelSpec, output_path: str, bins: int = 25) -> bool:
        """Radial per-area density histogram with the theory curve"""
        if not self.has_matplotlib:
            logger.error("matplotlib not available - cannot plot")
            return False
        if not isinstance(model, CueSum):
            raise ValueError("radial plots are defined for circularly symmetric models")
        self._ensure_parent(output_path)
        radii = np.abs(np.asarray(points))
        r_max = 1.05 * model.border_radius
        edges = np.linspace(0.0, r_max, bins + 1)
        counts, _ = np.histogram(radii, bins=edges)
        areas = np.pi * (edges[1:] ** 2 - edges[:-1] ** 2)
        density = counts / (radii.size * areas)

        curve_r = np.linspace(0.0, model.border_radius * 0.999, 400)
        shell = np.diff(cue_sum_cdf(model.m, model.scale, edges)) / areas
        w2 = (curve_r / model.scale) ** 2
        m = model.m
        curve = m * m * (m - 1) / (np.pi * (m * m - w2) ** 2) / model.scale ** 2

        fig, ax = plt.subplots(figsize=(7, 4.5))
        ax.stairs(density, edges, color='tab:blue', label='sampled')
        ax.stairs(shell, edges, color='tab:gray', linestyle=':', label='theory per shell')
        ax.plot(curve_r, curve, color='tab:red', linewidth=1.4, label='theory')
        ax.set_xlabel('|z|')
        ax.set_ylabel('density')
        ax.set_title(f"{model.label}: radial density")
        ax.legend()
        fig.savefig(output_path, format='svg', bbox_inches='tight')
        plt.close(fig)
        logger.info(f"radial plot written: {output_path}")
        return True

    def plot_density(self, grid: Dict[str, np.ndarray], model: Optional[ModelSpec], output_path: str) -> bool:
        """Heatmap of rho from a solve grid (read_grid_csv layout)"""
        if not self.has_matplotlib:
            logger.error("matplotlib not available - cannot plot")
            return False
        self._ensure_parent(output_path)
        xs = np.unique(grid['x'])
        ys = np.unique(grid['y'])
        if xs.size * ys.size != grid['x'].size:
            raise ValueError("grid CSV is not a full rectangular grid")
        order = np.lexsort((grid['x'], grid['y']))
        rho = grid['rho'][order].reshape(ys.size, xs.size)

        fig, ax = plt.subplots(figsize=(6.5, 5.5))
        mesh = ax.pcolormesh(xs, ys, rho, shading='nearest', cmap='viridis')
        fig.colorbar(mesh, ax=ax, label='rho')
        if model is not None:
            for cx, cy in model_border(model).curves():
                ax.plot(cx, cy, color='white', linewidth=0.8)
        ax.set_aspect('equal')
        ax.set_xlabel('Re z')
        ax.set_ylabel('Im z')
        fig.savefig(output_path, format='svg', bbox_inches='tight')
        plt.close(fig)
        logger.info(f"density plot written: {output_path}")
        return True

    # PDF

    def export_to_pdf(self, results: Dict[str, Any], output_path: str) -> bool:
        """
        Acceptance run summary as PDF

        Args:
            results: VerificationRunResult.to_dict()
            output_path: Output PDF file path

        Returns:
            Success status
        """
        if not self.has_reportlab:
            logger.error("reportlab not available - cannot export to PDF")
            return False

        try:
            self._ensure_parent(output_path)
            doc = SimpleDocTemplate(output_path, pagesize=A4)
            styles = getSampleStyleSheet()
            title_style = ParagraphStyle('FRVTitle', parent=styles['Heading1'], fontSize=20,
                                         spaceAfter=20, alignment=1)
            story = [Paragraph("FRVKit Acceptance Report", title_style), Spacer(1, 12)]

            summary = results.get('summary', {})
            info = [
                ['Run ID:', results.get('run_id', '')],
                ['Overall Status:', str(results.get('overall_status', 'unknown')).upper()],
                ['Suites:', f"{summary.get('passed', 0)} passed / {summary.get('failed', 0)} failed / "
                            f"{summary.get('errors', 0)} errors of {summary.get('total', 0)}"],
                ['Generated:', datetime.now().strftime('%Y-%m-%d %H:%M:%S')],
            ]
            info_table = Table(info, colWidths=[1.6 * inch, 4.4 * inch])
            info_table.setStyle(TableStyle([
                ('BACKGROUND', (0, 0), (0, -1), colors.lightgrey),
                ('FONTNAME', (0, 0), (-1, -1), 'Helvetica'),
                ('FONTSIZE', (0, 0), (-1, -1), 10),
                ('GRID', (0, 0), (-1, -1), 0.5, colors.black),
            ]))
            story.extend([info_table, Spacer(1, 16)])

            for suite_name, suite in results.get('results', {}).items():
                story.append(Paragraph(f"{suite_name}: {str(suite.get('status', '')).upper()}",
                                       styles['Heading3']))
                data = [['Metric', 'Status', 'Actual', 'Bound']]
                for validation in suite.get('validations', []):
                    data.append([
                        validation.get('metric', ''),
                        'pass' if validation.get('status') == 'pass' else 'FAIL',
                        _short(validation.get('actual')),
                        _short(validation.get('expected_max')),
                    ])
                for error in suite.get('errors', []):
                    data.append(['error', 'ERROR', str(error)[:60], ''])
                table = Table(data, colWidths=[2.2 * inch, 0.7 * inch, 1.5 * inch, 1.5 * inch])
                table.setStyle(TableStyle([
                    ('BACKGROUND', (0, 0), (-1, 0), colors.grey),
                    ('TEXTCOLOR', (0, 0), (-1, 0), colors.whitesmoke),
                    ('FONTNAME', (0, 0), (-1, 0), 'Helvetica-Bold'),
                    ('FONTSIZE', (0, 0), (-1, -1), 8),
                    ('GRID', (0, 0), (-1, -1), 0.5, colors.black),
                ]))
                story.extend([table, Spacer(1, 10)])

            doc.build(story)
            logger.info(f"PDF export completed: {output_path}")
            return True

        except (OSError, ValueError) as e:
            logger.error(f"Error exporting to PDF: {e}")
            return False

    def export_results(self, results: Dict[str, Any], format_type: str, output_path: str) -> bool:
        """
        Export an acceptance run in the specified format

        Args:
            results: run result dictionary
            format_type: 'json', 'csv' or 'pdf'
            output_path: Output file path

        Returns:
            Success status
        """
        format_type = format_type.lower()
        if format_type == 'json':
            return self.export_json(results, output_path)
        elif format_type == 'csv':
            return self.export_validations_csv(results, output_path)
        elif format_type == 'pdf':
            return self.export_to_pdf(results, output_path)
        logger.error(f"Unsupported export format: {format_type}")
        return False


def _short(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return '' if value is None else str(value)


def _json_default(value: Any):
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, complex):
        return [value.real, value.imag]
    raise TypeError(f"cannot serialize {type(value).__name__}")
