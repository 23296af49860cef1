"""
report.py

Persistencia y presentación de resultados: el ResultSet (filas por celda y agregados),
la escritura y lectura del CSV con la forma de la tabla de comparación, las curvas
tasa-métrica en SVG y el CSV de las curvas BER.

Disposición del directorio de resultados:

    results.csv         medias sobre elementos por (método, presupuesto, semilla), item = "mean"
    results_by_budget.csv  medias sobre semillas y elementos por (método, presupuesto)
    raw/rows.csv        filas por elemento
    config.echo.json    configuración con valores por defecto
    provenance.json     hash de la configuración, versión y marcas de tiempo
    plots/              semantic_nmse.svg y piqe.svg
"""

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from gsc.channel import BER_CSV_COLUMNS
from gsc.errors import GSCError
from gsc.metrics import MetricReport
from utils.logger import log_info

CSV_COLUMNS = ["scenario", "method", "budget_bytes", "semantic_nmse", "piqe", "nrqm", "kl", "cer", "flops",
               "seed", "item", "bytes_transmitted", "basis_mode", "status"]
BUDGET_CSV_COLUMNS = ["seeds" if c == "seed" else c for c in CSV_COLUMNS]
AGGREGATE_ITEM = "mean"
FLOAT_FIELDS = {"semantic_nmse": "semantic_nmse", "piqe": "piqe", "nrqm": "nrqm", "kl": "kl_divergence",
                "cer": "cer"}
PLOT_METRICS = {"semantic_nmse": "semantic-NMSE", "piqe": "PIQE"}
SVG_HASHSALT = "gsc"


def _budget_value(label):
    try:
        return int(label)
    except (TypeError, ValueError):
        return math.inf


def row_key(report):
    """Orden estable de las filas: método, presupuesto, semilla, elemento."""
    return (report.method, _budget_value(report.budget_label), report.budget_label, report.seed, report.item)


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def _grouped(rows, key):
    groups = {}
    for r in rows:
        groups.setdefault(key(r), []).append(r)
    return groups.values()


def _mean_report(group, seed):
    """
    Fila media de un grupo. Las filas fallidas no entran en las medias; el estado es
    ``failed`` si alguna falló, ``corrupt`` si alguna llegó con flujos inválidos y ``ok``
    en otro caso.
    """
    usable = [r for r in group if r.status != "failed"] or group
    statuses = {r.status for r in group}
    status = "failed" if "failed" in statuses else "corrupt" if "corrupt" in statuses else "ok"
    return MetricReport(
        scenario=group[0].scenario, method=group[0].method, budget_label=group[0].budget_label,
        bytes_transmitted=int(round(np.mean([r.bytes_transmitted for r in usable]))),
        flops_estimate=int(round(np.mean([r.flops_estimate for r in usable]))),
        semantic_nmse=_mean(r.semantic_nmse for r in usable),
        piqe=_mean(r.piqe for r in usable),
        kl_divergence=_mean(r.kl_divergence for r in usable),
        nrqm=_mean(r.nrqm for r in usable),
        cer=_mean(r.cer for r in usable),
        seed=seed, item=AGGREGATE_ITEM, basis_mode=group[0].basis_mode, status=status,
    )


def aggregate(rows):
    """Una fila por (método, presupuesto, semilla) con la media sobre los elementos."""
    groups = _grouped(rows, lambda r: (r.method, r.budget_label, r.seed))
    return sorted((_mean_report(g, g[0].seed) for g in groups), key=row_key)


def aggregate_over_seeds(rows):
    """
    Una fila por (método, presupuesto) con la media sobre semillas y elementos, la forma
    de la tabla comparativa.

    Returns:
        list: Pares (MetricReport, número de semillas), en el orden de row_key.
    """
    out = []
    for group in _grouped(rows, lambda r: (r.method, r.budget_label)):
        seeds = sorted({r.seed for r in group})
        out.append((_mean_report(group, seeds[0]), len(seeds)))
    return sorted(out, key=lambda pair: row_key(pair[0]))


@dataclass
class ResultSet:
    """
    Resultados de un experimento.

    Atributos:
        rows (list): MetricReport por (método, presupuesto, semilla, elemento).
        aggregates (list): Medias por (método, presupuesto, semilla).
        provenance (dict): Hash de la configuración, versión y marcas de tiempo.
    """

    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.rows = sorted(self.rows, key=row_key)
        if not self.aggregates and self.rows:
            self.aggregates = aggregate(self.rows)

    @property
    def failed(self):
        return any(r.status == "failed" for r in self.rows)


# --- CSV ----------------------------------------------------------------------------

def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_row(report):
    return {
        "scenario": report.scenario, "method": report.method, "budget_bytes": report.budget_label,
        "semantic_nmse": _fmt(report.semantic_nmse), "piqe": _fmt(report.piqe), "nrqm": _fmt(report.nrqm),
        "kl": _fmt(report.kl_divergence), "cer": _fmt(report.cer), "flops": str(report.flops_estimate),
        "seed": str(report.seed), "item": report.item, "bytes_transmitted": str(report.bytes_transmitted),
        "basis_mode": report.basis_mode, "status": report.status,
    }


def emit_csv(rows, path):
    """
    Escribe filas con el esquema CSV_COLUMNS en orden estable.

    Raises:
        GSCError: Si no hay filas o la ruta no es escribible.
    """
    if not rows:
        raise GSCError("No hay resultados que escribir.")
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for r in sorted(rows, key=row_key):
                writer.writerow(csv_row(r))
    except OSError as e:
        raise GSCError(f"No se pudo escribir {path}: {e}") from e


def emit_budget_csv(pairs, path):
    """
    Escribe las medias sobre semillas de aggregate_over_seeds; la columna ``seeds``
    sustituye a ``seed`` y cuenta las semillas promediadas.

    Raises:
        GSCError: Si no hay filas o la ruta no es escribible.
    """
    if not pairs:
        raise GSCError("No hay resultados que escribir.")
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.DictWriter(f, fieldnames=BUDGET_CSV_COLUMNS, lineterminator="\n")
            writer.writeheader()
            for report, seeds in pairs:
                row = csv_row(report)
                del row["seed"]
                writer.writerow(dict(row, seeds=str(seeds)))
    except OSError as e:
        raise GSCError(f"No se pudo escribir {path}: {e}") from e


def _parse_float(text):
    return float(text) if text != "" else None


def read_csv(path):
    """Inverso de emit_csv."""
    rows = []
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames != CSV_COLUMNS:
            raise GSCError(f"Cabecera CSV inesperada en {path}: {reader.fieldnames}")
        for d in reader:
            rows.append(MetricReport(
                scenario=d["scenario"], method=d["method"], budget_label=d["budget_bytes"],
                bytes_transmitted=int(d["bytes_transmitted"]), flops_estimate=int(d["flops"]),
                semantic_nmse=_parse_float(d["semantic_nmse"]), piqe=_parse_float(d["piqe"]),
                kl_divergence=_parse_float(d["kl"]), nrqm=_parse_float(d["nrqm"]), cer=_parse_float(d["cer"]),
                seed=int(d["seed"]), item=d["item"], basis_mode=d["basis_mode"], status=d["status"],
            ))
    return rows


# --- gráficas -----------------------------------------------------------------------

def emit_plot(rows, path, metric="semantic_nmse"):
    """
    Curva tasa-métrica en SVG: bytes transmitidos en el eje x y una serie por método
    con la media sobre semillas de las filas agregadas.

    Raises:
        GSCError: Si no hay filas o la ruta no es escribible.
    """
    if not rows:
        raise GSCError("No hay resultados que dibujar.")
    attr = FLOAT_FIELDS.get(metric, metric)
    series = {}
    for r in rows:
        value = getattr(r, attr)
        if value is not None and r.status != "failed":
            series.setdefault(r.method, {}).setdefault(_budget_value(r.budget_label), []).append(
                (r.bytes_transmitted, value))

    plt.rcParams["svg.hashsalt"] = SVG_HASHSALT
    fig, ax = plt.subplots()
    ax.set(xlabel="Bytes transmitidos", ylabel=PLOT_METRICS.get(metric, metric))
    for method in sorted(series):
        points = [np.mean(series[method][b], axis=0) for b in sorted(series[method])]
        xs, ys = zip(*points)
        ax.plot(xs, ys, marker="x", linestyle="-", label=method)
    if series:
        ax.legend()
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    except OSError as e:
        raise GSCError(f"No se pudo escribir {path}: {e}") from e
    finally:
        plt.close(fig)


def emit_plots(rows, directory):
    paths = []
    for metric in PLOT_METRICS:
        path = os.path.join(directory, f"{metric}.svg")
        emit_plot(rows, path, metric)
        paths.append(path)
    return paths


# --- directorio de resultados --------------------------------------------------------

def write_results(results, directory, echo=None):
    """Escribe el ResultSet con la disposición documentada en el módulo."""
    emit_csv(results.aggregates, os.path.join(directory, "results.csv"))
    emit_budget_csv(aggregate_over_seeds(results.rows), os.path.join(directory, "results_by_budget.csv"))
    emit_csv(results.rows, os.path.join(directory, "raw", "rows.csv"))
    if echo is not None:
        with open(os.path.join(directory, "config.echo.json"), "w", encoding="utf-8") as f:
            json.dump(echo, f, indent=4, sort_keys=True)
    with open(os.path.join(directory, "provenance.json"), "w", encoding="utf-8") as f:
        json.dump(results.provenance, f, indent=4, sort_keys=True)
    emit_plots(results.aggregates, os.path.join(directory, "plots"))
    log_info(f"Resultados escritos en {directory} ({len(results.rows)} filas).")


def read_results(directory):
    """
    Reconstruye un ResultSet desde un directorio de resultados.

    Raises:
        GSCError: Si falta results.csv.
    """
    path = os.path.join(directory, "results.csv")
    if not os.path.isfile(path):
        raise GSCError(f"No existe {path}.")
    raw_path = os.path.join(directory, "raw", "rows.csv")
    rows = read_csv(raw_path) if os.path.isfile(raw_path) else []
    provenance = {}
    prov_path = os.path.join(directory, "provenance.json")
    if os.path.isfile(prov_path):
        with open(prov_path, "r", encoding="utf-8") as f:
            provenance = json.load(f)
    return ResultSet(rows, read_csv(path), provenance)


def strip_checks(report):
    """Fila sin los indicadores de restricción, que no viajan en el CSV."""
    return replace(report, task_pass=None, perceptual_pass=None)


def write_ber_csv(rows, stream):
    """Escribe las filas de ber_sweep con las columnas BER_CSV_COLUMNS."""
    writer = csv.DictWriter(stream, fieldnames=BER_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _fmt(v) for k, v in row.items()})
