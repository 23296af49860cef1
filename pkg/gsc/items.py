"""
items.py

Elementos de datos del experimento: imágenes PGM (P5) / PPM (P6), blobs GSCT y vídeos
(subdirectorios de imágenes o blobs GSCT de tres dimensiones). Un vídeo se modela como
una secuencia ordenada de fotogramas independientes. Un archivo lateral
``<nombre>.json`` aporta metadatos (usados por el captioner).
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np
from PIL import Image

from gsc.errors import ItemError, TensorBlobError
from gsc.tensor_blob import decode_tensor_blob, encode_tensor_blob

IMAGE_EXTENSIONS = (".pgm", ".ppm")
BLOB_EXTENSIONS = (".gsct",)


@dataclass(frozen=True, eq=False)
class SourceItem:
    """
    Elemento fuente s (o destino ŝ).

    Atributos:
        name (str): Nombre del elemento (archivo sin extensión).
        frames (tuple): Fotogramas 2-D en float64.
        metadata (dict): Metadatos del archivo lateral, si existe.
    """

    name: str
    frames: tuple
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        frames = tuple(np.asarray(f, dtype=np.float64) for f in self.frames)
        if not frames or any(f.ndim != 2 or f.size == 0 for f in frames):
            raise ItemError(f"El elemento '{self.name}' necesita fotogramas 2-D no vacíos.")
        object.__setattr__(self, "frames", frames)

    @property
    def is_video(self):
        return len(self.frames) > 1

    @property
    def shape(self):
        return self.frames[0].shape

    def frame_metadata(self, index):
        """Metadatos de un fotograma: los del elemento más su índice."""
        return dict(self.metadata, frame_index=index, item=self.name)


def read_image(path):
    """Lee un PGM/PPM; las imágenes en color pasan a gris con los pesos ITU-R 601."""
    try:
        with Image.open(path) as img:
            if img.mode not in ("L", "RGB", "I", "I;16"):
                raise ItemError(f"Modo de imagen no soportado en {path}: {img.mode}")
            gray = img.convert("L") if img.mode == "RGB" else img
            return np.asarray(gray, dtype=np.float64)
    except (OSError, ValueError) as e:
        if isinstance(e, ItemError):
            raise
        raise ItemError(f"No se pudo leer la imagen {path}: {e}") from e


def write_image(path, frame):
    """Escribe un fotograma como PGM binario (P5), saturado a 0..255."""
    pixels = np.clip(np.round(np.asarray(frame, dtype=np.float64)), 0, 255).astype(np.uint8)
    Image.fromarray(pixels).save(path, format="PPM")


def _read_sidecar(path):
    sidecar = os.path.splitext(path)[0] + ".json"
    if os.path.isfile(sidecar):
        with open(sidecar, "r", encoding="utf-8") as f:
            return json.load(f)
    return {}


def load_item(path):
    """
    Carga un elemento desde un archivo o un directorio de fotogramas.

    Raises:
        ItemError: Formato no soportado o archivo ilegible.
    """
    name = os.path.splitext(os.path.basename(os.path.normpath(path)))[0]
    metadata = _read_sidecar(os.path.normpath(path))
    if os.path.isdir(path):
        files = sorted(f for f in os.listdir(path) if f.lower().endswith(IMAGE_EXTENSIONS))
        if not files:
            raise ItemError(f"El directorio {path} no contiene fotogramas.")
        return SourceItem(name, [read_image(os.path.join(path, f)) for f in files], metadata)
    ext = os.path.splitext(path)[1].lower()
    if ext in IMAGE_EXTENSIONS:
        return SourceItem(name, [read_image(path)], metadata)
    if ext in BLOB_EXTENSIONS:
        with open(path, "rb") as f:
            data = f.read()
        try:
            tensor, end = decode_tensor_blob(data)
        except TensorBlobError as e:
            raise ItemError(f"Blob inválido en {path}: {e}") from e
        if end != len(data):
            raise ItemError(f"Sobran bytes tras el blob en {path}.")
        if tensor.ndim == 2:
            return SourceItem(name, [tensor], metadata)
        if tensor.ndim == 3:
            return SourceItem(name, list(tensor), metadata)
        raise ItemError(f"El blob de {path} debe tener 2 o 3 dimensiones.")
    raise ItemError(f"Extensión no soportada: {path}")


def load_dataset(directory):
    """
    Carga todos los elementos de un directorio, ordenados por nombre.

    Raises:
        ItemError: Directorio inexistente o sin elementos.
    """
    if not os.path.isdir(directory):
        raise ItemError(f"El dataset {directory} no existe.")
    items = []
    for entry in sorted(os.listdir(directory)):
        path = os.path.join(directory, entry)
        if os.path.isdir(path) or entry.lower().endswith(IMAGE_EXTENSIONS + BLOB_EXTENSIONS):
            items.append(load_item(path))
    if not items:
        raise ItemError(f"El dataset {directory} está vacío.")
    return items


def save_item_blob(path, item):
    """Guarda un elemento como blob GSCT (2-D si es imagen, 3-D si es vídeo)."""
    stack = item.frames[0] if not item.is_video else np.stack(item.frames)
    with open(path, "wb") as f:
        f.write(encode_tensor_blob(stack.astype(np.float32)))
