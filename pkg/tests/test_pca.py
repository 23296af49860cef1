import numpy as np
import pytest

from gsc.errors import DimensionError
from gsc.metrics import nmse
from gsc.pca import fit_basis, project, reconstruct, truncate_basis


@pytest.fixture
def samples(rng):
    # datos correlados: mezcla lineal de fuentes con varianzas distintas
    latent = rng.normal(size=(500, 32)) * np.linspace(5.0, 0.1, 32)
    return latent @ rng.normal(size=(32, 32)) + 3.0


def test_nmse_de_reconstruccion_no_crece_con_el_rango(samples):
    full = fit_basis(samples, 32)
    errors = []
    for k in range(1, 33):
        basis = truncate_basis(full, k)
        errors.append(nmse(samples, reconstruct(basis, project(basis, samples))))
    assert all(b <= a + 1e-12 for a, b in zip(errors, errors[1:]))
    assert errors[-1] < 1e-10


def test_componentes_coinciden_con_autodescomposicion(samples):
    basis = fit_basis(samples, 8)
    centered = samples - samples.mean(axis=0)
    eigvals, eigvecs = np.linalg.eigh(centered.T @ centered / (len(samples) - 1))
    top = eigvecs[:, np.argsort(eigvals)[::-1][:8]].T
    for got, ref in zip(basis.components, top):
        assert min(np.max(np.abs(got - ref)), np.max(np.abs(got + ref))) < 1e-6
    assert basis.is_orthonormal()
    assert np.all(np.diff(basis.variances) <= 1e-9)


def test_ajuste_determinista_y_truncado_conserva_id(samples):
    a = fit_basis(samples, 6)
    b = fit_basis(samples, 6)
    assert a.basis_id == b.basis_id
    assert np.array_equal(a.components, b.components)
    assert truncate_basis(a, 3).basis_id == a.basis_id


def test_datos_degenerados_completan_base_ortonormal():
    samples = np.tile(np.arange(8.0), (20, 1))
    basis = fit_basis(samples, 8)
    assert basis.is_orthonormal()
    assert np.allclose(reconstruct(basis, project(basis, samples)), samples)


def test_errores_de_dimension(samples):
    with pytest.raises(DimensionError):
        fit_basis(samples, 33)
    with pytest.raises(DimensionError):
        fit_basis(samples[:4], 8)
    basis = fit_basis(samples, 4)
    with pytest.raises(DimensionError):
        project(basis, np.zeros((2, 31)))
    with pytest.raises(DimensionError):
        reconstruct(basis, np.zeros((2, 5)))
    with pytest.raises(DimensionError):
        truncate_basis(basis, 0)
