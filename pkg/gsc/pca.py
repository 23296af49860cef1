"""
pca.py

Este módulo define la clase PcaBasis y las operaciones de compresión por análisis de
componentes principales: ajuste de la base a partir de muestras, proyección y
reconstrucción. La base se obtiene por autodescomposición de la covarianza muestral
con un convenio de signos determinista.
"""

import hashlib
from dataclasses import dataclass

import numpy as np

from gsc.errors import DimensionError

ORTHO_TOL = 1e-8


@dataclass(frozen=True)
class PcaBasis:
    """
    Base PCA de rango k en un espacio de dimensión d.

    Atributos:
        dim (int): Dimensión d de los vectores originales.
        rank (int): Número k de componentes.
        mean (np.ndarray): Media muestral, vector de longitud d.
        components (np.ndarray): Matriz k×d de filas ortonormales.
        basis_id (str): Identificador compartido por transmisor y receptor.
        variances (np.ndarray): Varianza explicada por cada componente.
    """

    dim: int
    rank: int
    mean: np.ndarray
    components: np.ndarray
    basis_id: str
    variances: np.ndarray = None

    def __post_init__(self):
        if self.rank < 1 or self.rank > self.dim:
            raise DimensionError(f"Rango {self.rank} fuera de [1, {self.dim}].")
        if self.components.shape != (self.rank, self.dim) or self.mean.shape != (self.dim,):
            raise DimensionError("Las formas de la media o de las componentes no cuadran con la base.")

    def is_orthonormal(self, tol=ORTHO_TOL):
        gram = self.components @ self.components.T
        return bool(np.max(np.abs(gram - np.eye(self.rank))) <= tol)


def _basis_id(mean, components):
    digest = hashlib.sha256(mean.tobytes() + components.tobytes()).hexdigest()
    return f"pca{components.shape[1]}x{components.shape[0]}-{digest[:8]}"


def _fix_signs(components):
    # primer elemento no nulo de cada componente positivo
    for row in components:
        nz = np.flatnonzero(np.abs(row) > 1e-12)
        if nz.size and row[nz[0]] < 0:
            row *= -1.0
    return components


def _complete_orthonormal(vectors, dim, needed):
    """Completa ``vectors`` con vectores de la base canónica (Gram-Schmidt, en orden)."""
    basis = [v for v in vectors]
    for i in range(dim):
        if len(basis) >= needed:
            break
        e = np.zeros(dim)
        e[i] = 1.0
        for b in basis:
            e -= (b @ e) * b
        norm = np.linalg.norm(e)
        if norm > 1e-6:
            basis.append(e / norm)
    return np.array(basis[:needed]).reshape(needed, dim)


def fit_basis(samples, rank, basis_id=None):
    """
    Ajusta una base PCA de rango ``rank``.

    Las componentes son los k autovectores principales de la covarianza muestral,
    ordenados por varianza decreciente. Las direcciones de varianza nula se completan
    con vectores de la base canónica ortonormalizados.

    Args:
        samples (array-like): Matriz n×d de muestras.
        rank (int): Rango k deseado.
        basis_id (str, opcional): Identificador; por defecto se deriva del contenido.

    Returns:
        PcaBasis: Base ajustada.

    Raises:
        DimensionError: Si k > d, k < 1 o hay menos muestras que k.
    """
    x = np.asarray(samples, dtype=np.float64)
    if x.ndim != 2:
        raise DimensionError("Las muestras deben formar una matriz n×d.")
    n, d = x.shape
    if rank < 1 or rank > d:
        raise DimensionError(f"Rango {rank} fuera de [1, {d}].")
    if n < rank:
        raise DimensionError(f"Se necesitan al menos {rank} muestras y hay {n}.")

    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / max(n - 1, 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1]
    eigvals, eigvecs = eigvals[order], eigvecs[:, order]

    tol = max(eigvals[0], 0.0) * d * np.finfo(float).eps * 10 + 1e-300
    informative = [eigvecs[:, i] for i in range(d) if eigvals[i] > tol][:rank]
    components = _complete_orthonormal(informative, d, rank)
    components = _fix_signs(components)
    variances = np.array([float(c @ cov @ c) for c in components])

    return PcaBasis(d, rank, mean, components, basis_id or _basis_id(mean, components), variances)


def truncate_basis(basis, rank):
    """Primeras ``rank`` componentes de la base; conserva el basis_id."""
    if rank < 1 or rank > basis.rank:
        raise DimensionError(f"Rango {rank} fuera de [1, {basis.rank}].")
    variances = None if basis.variances is None else basis.variances[:rank]
    return PcaBasis(basis.dim, rank, basis.mean, basis.components[:rank], basis.basis_id, variances)


def project(basis, x):
    """
    Proyecta x (vector d o matriz n×d) sobre la base: components·(x − mean).

    Raises:
        DimensionError: Si la última dimensión de x no es d.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != basis.dim:
        raise DimensionError(f"Se esperaba dimensión {basis.dim} y llegó {x.shape[-1]}.")
    return (x - basis.mean) @ basis.components.T


def reconstruct(basis, y):
    """
    Reconstruye desde coeficientes: componentsᵀ·y + mean.

    Raises:
        DimensionError: Si la última dimensión de y no es k.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[-1] != basis.rank:
        raise DimensionError(f"Se esperaban {basis.rank} coeficientes y llegaron {y.shape[-1]}.")
    return y @ basis.components + basis.mean
