"""
system.py

Este módulo define la clase SistemaGSC, el controlador central de un experimento:
carga el dataset, calibra las bases compartidas de cada método, ejecuta el producto
cartesiano métodos × presupuestos × semillas × elementos y guarda o recupera el
estado (directorio de resultados) en archivos JSON y CSV.
"""

import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

from gsc import __version__
from gsc.config import pipeline_config
from gsc.errors import GSCError
from gsc.items import load_dataset
from gsc.metrics import MetricReport
from gsc.pipeline import BasisRegistry, Pipeline, safe_run
from gsc.report import ResultSet, read_results, write_results
from utils.logger import log_error, log_info, log_warning


def _timestamp():
    return time.strftime("%Y-%m-%d %H:%M:%S")


def _failed_rows(cfg, items, seed, label, reason):
    log_warning(f"Celda {label}/{cfg.byte_budget}/{seed} fallida: {reason}")
    return [MetricReport(cfg.scenario, label, str(cfg.byte_budget), 0, 0, seed=seed, item=item.name,
                         basis_mode=cfg.basis_mode if cfg.method == "gsc" else "", status="failed")
            for item in items]


def run_cell(cfg, items, label, registry=None):
    """
    Ejecuta una celda (método, presupuesto, semilla) sobre todos los elementos con un
    pipeline propio; los fallos se devuelven como filas ``failed``.
    """
    seed = cfg.channel.seed
    try:
        pipeline = Pipeline(cfg, registry.copy() if registry is not None else None)
    except (GSCError, ValueError) as e:
        return _failed_rows(cfg, items, seed, label, e)
    with pipeline:
        return [replace(safe_run(pipeline, item, seed), method=label) for item in items]


class SistemaGSC:
    """
    Clase que encapsula un experimento: configuración, dataset, bases calibradas y resultados.
    """

    def __init__(self, config):
        """
        Args:
            config (ExperimentConfig): Configuración validada.
        """
        self.config = config
        self.items = []
        self.registros = {}  # {"etiqueta del método": BasisRegistry}
        self.resultados = None

    def cargar_dataset(self):
        """
        Carga los elementos del dataset configurado.

        Raises:
            ItemError: Dataset inexistente o vacío.
        """
        self.items = load_dataset(self.config.dataset)
        log_info(f"Dataset '{self.config.dataset}' cargado: {len(self.items)} elementos.")
        return self.items

    def calibrar(self):
        """
        Ajusta las bases compartidas de cada método gsc en modo ``shared`` con el
        directorio de calibración (por defecto el propio dataset).
        """
        calibration = None
        for method in self.config.methods:
            if method.pipeline is None or method.pipeline.method != "gsc" or method.pipeline.basis_mode != "shared":
                continue
            if calibration is None:
                calibration = load_dataset(self.config.calibration) if self.config.calibration else self.items
            cfg = pipeline_config(self.config, method, None, self.config.seeds[0])
            try:
                with Pipeline(cfg) as pipeline:
                    self.registros[method.label] = pipeline.calibrate(calibration)
            except (GSCError, ValueError) as e:
                log_error(f"Calibración del método '{method.label}' fallida, sus celdas fallarán: {e}")
        return self.registros

    def celdas(self):
        """Celdas del experimento en orden determinista: (etiqueta, PipelineConfig)."""
        return [(m.label, pipeline_config(self.config, m, budget, seed))
                for m in self.config.methods for budget in self.config.budgets for seed in self.config.seeds]

    def ejecutar(self):
        """
        Ejecuta todas las celdas y agrega los resultados.

        Returns:
            ResultSet: Filas por elemento, agregados y procedencia.
        """
        if not self.items:
            self.cargar_dataset()
        if not self.registros:
            self.calibrar()
        inicio = _timestamp()
        celdas = self.celdas()

        def run(celda):
            label, cfg = celda
            return run_cell(cfg, self.items, label, self.registros.get(label))

        if self.config.workers > 1:
            with ThreadPoolExecutor(max_workers=self.config.workers) as pool:
                bloques = list(pool.map(run, celdas))
        else:
            bloques = [run(c) for c in celdas]

        rows = [r for bloque in bloques for r in bloque]
        provenance = {"config_hash": self.config.config_hash(), "version": __version__,
                      "started": inicio, "finished": _timestamp(), "cells": len(celdas)}
        self.resultados = ResultSet(rows, provenance=provenance)
        fallidas = sum(r.status == "failed" for r in rows)
        log_info(f"Experimento '{self.config.name}': {len(rows)} filas, {fallidas} fallidas.")
        return self.resultados

    def guardar_estado(self, carpeta=None):
        """
        Guarda el directorio de resultados (CSV, configuración, procedencia y gráficas).

        Args:
            carpeta (str): Directorio destino; por defecto el ``output`` configurado.
        """
        if self.resultados is None:
            raise GSCError("No hay resultados que guardar; ejecute el experimento primero.")
        carpeta = carpeta or self.config.output
        os.makedirs(carpeta, exist_ok=True)
        write_results(self.resultados, carpeta, self.config.echo())
        return carpeta

    def cargar_estado(self, carpeta=None):
        """
        Carga los resultados guardados en un directorio.

        Args:
            carpeta (str): Directorio de resultados; por defecto el ``output`` configurado.
        """
        self.resultados = read_results(carpeta or self.config.output)
        return self.resultados


def run_experiment(config):
    """
    Ejecuta un experimento completo sin escribir resultados.

    Args:
        config (ExperimentConfig): Configuración validada.

    Returns:
        ResultSet: Resultados; las celdas fallidas figuran como filas ``failed``.
    """
    return SistemaGSC(config).ejecutar()
