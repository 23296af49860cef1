"""
pipeline.py

Composición de la cadena completa de comunicación semántica generativa:

    extractor q(·) → PCA → cuantización → SemanticPayload → LDPC → canal AWGN →
    decodificación LDPC → payload recibido → reconstrucción → generador → ŝ

además de los dos métodos de comparación: ``traditional`` (códec DCT por bloques sobre
los fotogramas fuente) y ``semantic_dct`` (los tensores del extractor comprimidos con el
códec DCT en lugar de PCA). Un vídeo se transmite fotograma a fotograma; cada
fotograma viaja en su propio payload.

Con presupuesto de bytes, el transmisor reduce primero el rango de los flujos
perceptuales, después sus bits y por último los bits de los flujos de tarea.
Si los flujos perceptuales están desactivados solo viaja g_GSC (el caso TOSC).
"""

from dataclasses import dataclass, field, replace

import numpy as np

from gsc.adapters import AdapterSpec, open_adapter
from gsc.channel import ChannelConfig, bits_to_bytes, bytes_to_bits, frame_bits, transmit_frame, unframe_bits
from gsc.dct_codec import dct_baseline_decode, dct_baseline_encode, dct_baseline_encode_budget
from gsc.errors import (AdapterError, BasisUnknownError, BudgetInfeasibleError, CodecError, DimensionError,
                        GSCError, PayloadError)
from gsc.items import SourceItem
from gsc.ldpc import DEFAULT_CODE_ID, DEFAULT_MAX_ITERS, DEFAULT_NORMALIZATION, ldpc_decode, resolve_code
from gsc.metrics import (FlopStage, MetricReport, character_error_rate, constraint_checks, dct_transforms,
                         flops_estimate, nmse, perceptual_scores, semantic_nmse)
from gsc.payload import (BASIS, CODED, HEADER_SIZE, PERCEPTUAL, ROLE_PERCEPTUAL, ROLE_SOURCE, ROLE_TASK, TASK,
                         TEXT, SemanticPayload, basis_stream, coded_stream, deserialize_payload,
                         payload_byte_size, serialize_payload, stream_spans, text_stream, vector_stream)
from gsc.pca import fit_basis, project, reconstruct, truncate_basis
from gsc.quantizer import packed_size, quant_spec_for, quantize
from utils.logger import log_debug, log_info, log_warning

METHODS = ("gsc", "traditional", "semantic_dct")
SCENARIOS = ("online_meeting", "road_monitoring", "custom")
BASIS_MODES = ("shared", "self-contained")
DEFAULT_QUALITY = 75

# extractor y generador por defecto de cada escenario
SCENARIO_ADAPTERS = {
    "online_meeting": (AdapterSpec("builtin", "meeting"), AdapterSpec("builtin", "compose")),
    "road_monitoring": (AdapterSpec("builtin", "road"), AdapterSpec("builtin", "upsample")),
    "custom": (AdapterSpec("builtin", "identity"), AdapterSpec("builtin", "identity")),
}


@dataclass(frozen=True)
class StreamSettings:
    """Rango (None = completo), bits y activación de una clase de flujos."""

    rank: int = None
    bits: int = 8
    enabled: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    """
    Configuración de un pipeline.

    Atributos:
        scenario (str): online_meeting, road_monitoring o custom.
        method (str): gsc, traditional o semantic_dct.
        extractor, generator (AdapterSpec): Puestos q(·) y generador.
        embedder (AdapterSpec): Embedder opcional para semantic-NMSE sin tensores de tarea.
        nrqm (AdapterSpec): Adaptador opcional cuyo ``embed`` devuelve la puntuación NRQM.
        task, perceptual (StreamSettings): Rango y bits por clase de flujo.
        basis_mode (str): shared o self-contained.
        fit_on_demand (bool): En modo shared, ajusta sobre el propio elemento las bases que
            falten en el registro en lugar de fallar. Esas bases no viajan ni se cobran.
        code_id (str): Código LDPC.
        channel (ChannelConfig): Canal.
        byte_budget (int): Presupuesto del payload antes de LDPC, o None.
        quality (int): Calidad DCT sin presupuesto.
        semantic_nmse_max, piqe_max (float): Umbrales de las restricciones.
    """

    scenario: str = "custom"
    method: str = "gsc"
    extractor: AdapterSpec = None
    generator: AdapterSpec = None
    embedder: AdapterSpec = None
    nrqm: AdapterSpec = None
    task: StreamSettings = StreamSettings(None, 12)
    perceptual: StreamSettings = StreamSettings(None, 8)
    basis_mode: str = "shared"
    fit_on_demand: bool = False
    code_id: str = DEFAULT_CODE_ID
    channel: ChannelConfig = ChannelConfig()
    max_iters: int = DEFAULT_MAX_ITERS
    normalization: float = DEFAULT_NORMALIZATION
    byte_budget: int = None
    quality: int = DEFAULT_QUALITY
    semantic_nmse_max: float = 0.05
    piqe_max: float = 50.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"Escenario desconocido: {self.scenario}")
        if self.method not in METHODS:
            raise ValueError(f"Método desconocido: {self.method}")
        if self.basis_mode not in BASIS_MODES:
            raise ValueError(f"Modo de base desconocido: {self.basis_mode}")
        if self.byte_budget is not None and self.byte_budget < HEADER_SIZE:
            raise ValueError(f"El presupuesto debe ser ≥ {HEADER_SIZE} bytes (cabecera del payload).")
        extractor, generator = SCENARIO_ADAPTERS[self.scenario]
        if self.extractor is None:
            object.__setattr__(self, "extractor", extractor)
        if self.generator is None:
            object.__setattr__(self, "generator", generator)


@dataclass(frozen=True)
class CodingSettings:
    """Parámetros efectivos tras aplicar el presupuesto."""

    task_rank: int
    task_bits: int
    perceptual_rank: int
    perceptual_bits: int


# --- registro de bases ----------------------------------------------------------

def tensor_rows(tensor):
    """Un tensor [H, W] son H vectores de dimensión W."""
    t = np.asarray(tensor, dtype=np.float64)
    if t.ndim == 0:
        return t.reshape(1, 1)
    if t.ndim == 1:
        return t.reshape(1, -1)
    return t.reshape(-1, t.shape[-1])


def basis_key(role, index, dim):
    return f"{role}{index}:{dim}"


class BasisRegistry:
    """
    Bases PCA compartidas por transmisor y receptor. En modo ``shared`` se ajustan
    fuera de línea sobre datos de calibración; en ``self-contained`` viajan en el payload.
    """

    def __init__(self):
        self._by_key = {}
        self._by_id = {}

    def __len__(self):
        return len(self._by_key)

    def register(self, key, basis):
        self._by_key[key] = basis
        self._by_id[basis.basis_id] = basis

    def copy(self):
        other = BasisRegistry()
        for key, basis in self._by_key.items():
            other.register(key, basis)
        return other

    def get(self, key):
        return self._by_key.get(key)

    def by_id(self, basis_id):
        return self._by_id.get(basis_id)

    def fit(self, key, samples):
        samples = np.asarray(samples, dtype=np.float64)
        rank = min(samples.shape[1], samples.shape[0])
        basis = fit_basis(samples, rank)
        self.register(key, basis)
        log_debug(f"Base {basis.basis_id} ajustada para {key} con {samples.shape[0]} muestras.")
        return basis

    @classmethod
    def calibrate(cls, items, extractor, include_perceptual=True):
        """
        Ajusta una base por (rol, índice de tensor, dimensión) con los tensores que el
        extractor produce sobre los elementos de calibración.
        """
        rows = {}
        for item in items:
            for i, frame in enumerate(item.frames):
                result = extractor.extract(frame, item.frame_metadata(i))
                groups = [("task", result.task)]
                if include_perceptual:
                    groups.append(("perceptual", result.perceptual))
                for role, tensors in groups:
                    for j, tensor in enumerate(tensors):
                        r = tensor_rows(tensor)
                        rows.setdefault(basis_key(role, j, r.shape[1]), []).append(r)
        registry = cls()
        for key in sorted(rows):
            registry.fit(key, np.concatenate(rows[key]))
        log_info(f"Calibración: {len(registry)} bases ajustadas sobre {len(items)} elementos.")
        return registry


# --- resultados intermedios -------------------------------------------------------

@dataclass
class Accounting:
    """
    Contabilidad de una transmisión.

    Atributos:
        payload_bytes (int): Suma de payload_byte_size de todos los fotogramas.
        coded_bits (int): Bits tras LDPC (⌈bits del payload / k⌉ · n por fotograma).
        codewords (int): Palabras código enviadas.
        settings (CodingSettings): Rango y bits efectivos (gsc).
        quality (int): Calidad DCT efectiva (traditional, semantic_dct).
        stages (list): Etapas FlopStage del lado transmisor.
    """

    payload_bytes: int = 0
    coded_bits: int = 0
    codewords: int = 0
    settings: CodingSettings = None
    quality: int = None
    stages: list = field(default_factory=list)


@dataclass
class Transmission:
    item: SourceItem
    extracted: list
    payloads: list
    coded: list
    accounting: Accounting


@dataclass
class ReceivedFrame:
    """Un fotograma recibido con la validez de cada flujo."""

    payload: SemanticPayload
    stream_valid: list
    image: np.ndarray
    text: str = None
    converged: bool = True
    iterations: int = 0

    @property
    def valid(self):
        return self.payload is not None and all(self.stream_valid)


@dataclass
class Reception:
    item: SourceItem
    frames: list
    stages: list = field(default_factory=list)

    @property
    def payloads(self):
        return [f.payload for f in self.frames]

    @property
    def valid(self):
        return all(f.valid for f in self.frames)


def _largest(fits, lo, hi):
    """Mayor v en [lo, hi] con fits(v), suponiendo fits monótona decreciente."""
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if fits(mid):
            best, lo = mid, mid + 1
        else:
            hi = mid - 1
    return best


# --- pipeline ---------------------------------------------------------------------

class Pipeline:
    """
    Un pipeline con sus adaptadores abiertos, su registro de bases y su código LDPC.
    Cada ejecución independiente posee su propio Pipeline.
    """

    def __init__(self, config, registry=None):
        self.config = config
        self.registry = registry if registry is not None else BasisRegistry()
        self.code = resolve_code(config.code_id)
        self._adapters = {}

    def adapter(self, role):
        spec = getattr(self.config, role)
        if spec is None:
            return None
        if role not in self._adapters:
            self._adapters[role] = open_adapter(spec)
        return self._adapters[role]

    def close(self):
        for adapter in self._adapters.values():
            adapter.close()
        self._adapters.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    def calibrate(self, items):
        """Ajusta las bases compartidas con el extractor de este pipeline."""
        self.registry = BasisRegistry.calibrate(items, self.adapter("extractor"),
                                                self.config.perceptual.enabled)
        return self.registry

    # --- transmisión ---------------------------------------------------------

    def extract(self, item, seed=0):
        extractor = self.adapter("extractor")
        results = [extractor.extract(frame, item.frame_metadata(i), seed) for i, frame in enumerate(item.frames)]
        if not self.config.perceptual.enabled:
            for r in results:
                r.perceptual = []
        return results

    def _vector_entries(self, results):
        """Descriptores de los flujos vectoriales de cada fotograma: (tipo, base, filas)."""
        plan = []
        for result in results:
            entries = []
            for stype, role, tensors in ((TASK, "task", result.task), (PERCEPTUAL, "perceptual", result.perceptual)):
                for j, tensor in enumerate(tensors):
                    rows = tensor_rows(tensor)
                    basis = self._basis_for(basis_key(role, j, rows.shape[1]), rows)
                    entries.append((stype, basis, rows))
            plan.append((entries, result.text))
        return plan

    def _basis_for(self, key, rows):
        """
        Base registrada para ``key``. En self-contained, si falta, se ajusta sobre el
        propio elemento sin registrarla porque viaja en el payload.

        Raises:
            BasisUnknownError: En modo shared sin base calibrada y sin ``fit_on_demand``.
        """
        basis = self.registry.get(key)
        if basis is not None:
            return basis
        if self.config.basis_mode == "self-contained":
            return fit_basis(rows, min(rows.shape))
        if not self.config.fit_on_demand:
            raise BasisUnknownError(f"No hay base calibrada para {key}; calibra el pipeline antes de transmitir.")
        log_warning(f"Base {key} ajustada sobre el elemento transmitido (fit_on_demand).")
        return self.registry.fit(key, rows)

    def _settings_for(self, stype, settings):
        if stype == TASK:
            return settings.task_rank, settings.task_bits
        return settings.perceptual_rank, settings.perceptual_bits

    @staticmethod
    def _effective_rank(requested, basis):
        return basis.rank if requested is None else min(int(requested), basis.rank)

    def _planned_size(self, plan, settings):
        total = 0
        for entries, text in plan:
            total += HEADER_SIZE
            for stype, basis, rows in entries:
                rank, bits = self._settings_for(stype, settings)
                r = self._effective_rank(rank, basis)
                ident = len(basis.basis_id.encode("utf-8"))
                total += 1 + 1 + ident + 2 + 4 + 1 + 8 * r + packed_size(rows.shape[0] * r, bits)
                if self.config.basis_mode == "self-contained":
                    total += 1 + 1 + ident + 2 + 2 + 4 * basis.dim * (1 + r)
            if text is not None:
                total += 1 + 4 + len(text.encode("utf-8"))
        return total

    def _apply_budget(self, plan, settings):
        budget = self.config.byte_budget
        fits = lambda s: self._planned_size(plan, s) <= budget
        if budget is None or fits(settings):
            return settings
        perceptual = [b for entries, _ in plan for stype, b, _ in entries if stype == PERCEPTUAL]
        if perceptual:
            top = settings.perceptual_rank or max(b.rank for b in perceptual)
            r = _largest(lambda v: fits(replace(settings, perceptual_rank=v)), 1, top)
            if r is not None:
                return replace(settings, perceptual_rank=r)
            settings = replace(settings, perceptual_rank=1)
            b = _largest(lambda v: fits(replace(settings, perceptual_bits=v)), 1, settings.perceptual_bits)
            if b is not None:
                return replace(settings, perceptual_bits=b)
            settings = replace(settings, perceptual_bits=1)
        b = _largest(lambda v: fits(replace(settings, task_bits=v)), 1, settings.task_bits)
        if b is not None:
            return replace(settings, task_bits=b)
        raise BudgetInfeasibleError(
            f"El payload no cabe en {budget} bytes ni con el mínimo de rango y bits "
            f"({self._planned_size(plan, replace(settings, task_bits=1))} bytes).")

    def _encode_gsc(self, results, accounting):
        cfg = self.config
        plan = self._vector_entries(results)
        settings = CodingSettings(cfg.task.rank, cfg.task.bits, cfg.perceptual.rank, cfg.perceptual.bits)
        settings = self._apply_budget(plan, settings)
        accounting.settings = settings
        payloads = []
        for entries, text in plan:
            streams = []
            for stype, basis, rows in entries:
                rank, bits = self._settings_for(stype, settings)
                reduced = truncate_basis(basis, self._effective_rank(rank, basis))
                coeffs = project(reduced, rows)
                quant = quant_spec_for(coeffs, bits)
                if cfg.basis_mode == "self-contained":
                    streams.append(basis_stream(reduced))
                streams.append(vector_stream(stype, reduced.basis_id, quantize(quant, coeffs), quant))
                accounting.stages.append(FlopStage("pca", {"dim": basis.dim, "rank": reduced.rank,
                                                           "vectors": rows.shape[0]}))
                accounting.stages.append(FlopStage("quantize", {"scalars": coeffs.size}))
            if text is not None:
                streams.append(text_stream(text))
            payloads.append(SemanticPayload(streams))
        return payloads

    def _encode_semantic_dct(self, results, accounting):
        budget = self.config.byte_budget

        def build(quality):
            payloads = []
            for result in results:
                streams = []
                for role, tensors in ((ROLE_TASK, result.task), (ROLE_PERCEPTUAL, result.perceptual)):
                    for tensor in tensors:
                        t = tensor_rows(tensor)
                        lo, hi = float(t.min()), float(t.max())
                        streams.append(coded_stream(dct_baseline_encode(t, quality, (lo, hi)), role))
                if result.text is not None:
                    streams.append(text_stream(result.text))
                payloads.append(SemanticPayload(streams))
            return payloads

        quality = self.config.quality
        if budget is not None:
            fits = lambda q: sum(payload_byte_size(p) for p in build(q)) <= budget
            quality = _largest(fits, 1, 100)
            if quality is None:
                raise BudgetInfeasibleError(f"Los tensores no caben en {budget} bytes ni con calidad 1.")
        accounting.quality = quality
        for result in results:
            for tensor in list(result.task) + list(result.perceptual):
                t = tensor_rows(tensor)
                accounting.stages.append(FlopStage("dct", {"transforms": dct_transforms(*t.shape)}))
        return build(quality)

    def _encode_traditional(self, item, accounting):
        budget = self.config.byte_budget
        payloads = []
        qualities = []
        for frame in item.frames:
            value_range = (min(0.0, float(frame.min())), max(255.0, float(frame.max())))
            if budget is None:
                quality = self.config.quality
                data = dct_baseline_encode(frame, quality, value_range)
            else:
                # cabecera del payload + cabecera del flujo de códec
                share = budget // len(item.frames) - HEADER_SIZE - 6
                if share <= 0:
                    raise BudgetInfeasibleError(f"El presupuesto {budget} no alcanza para {len(item.frames)} fotogramas.")
                data, quality = dct_baseline_encode_budget(frame, share, value_range)
            qualities.append(quality)
            payloads.append(SemanticPayload([coded_stream(data, ROLE_SOURCE)]))
            accounting.stages.append(FlopStage("dct", {"transforms": dct_transforms(*frame.shape)}))
        accounting.quality = min(qualities)
        return payloads

    def transmit(self, item, seed=0):
        """
        Extrae, codifica en fuente, serializa y entrama en palabras LDPC cada fotograma.

        Args:
            item (SourceItem): Elemento fuente.
            seed (int): Semilla para adaptadores estocásticos.

        Returns:
            Transmission: Tramas codificadas, payloads y contabilidad.

        Raises:
            BudgetInfeasibleError: Si el presupuesto no se puede cumplir.
            AdapterError: Si falla el extractor.
        """
        accounting = Accounting()
        if self.config.method == "traditional":
            extracted = []
            payloads = self._encode_traditional(item, accounting)
        else:
            extracted = self.extract(item, seed)
            for r in extracted:
                if r.flops:
                    accounting.stages.append(FlopStage("adapter", {"flops": r.flops}))
            if self.config.method == "gsc":
                payloads = self._encode_gsc(extracted, accounting)
            else:
                payloads = self._encode_semantic_dct(extracted, accounting)

        coded = []
        for p, shape in zip(payloads, (f.shape for f in item.frames)):
            frame = frame_bits(self.code, bytes_to_bits(serialize_payload(p)), shape)
            coded.append(frame)
            accounting.payload_bytes += payload_byte_size(p)
            accounting.codewords += frame.frames
            accounting.coded_bits += frame.bits.size
        accounting.stages.append(FlopStage("ldpc_encode", {"n": self.code.n, "k": self.code.k,
                                                           "frames": accounting.codewords}))
        log_debug(f"{item.name}: {accounting.payload_bytes} bytes de payload, "
                  f"{accounting.codewords} palabras código.")
        return Transmission(item, extracted, payloads, coded, accounting)

    # --- recepción -----------------------------------------------------------

    def channel_llrs(self, coded):
        """LLRs de cada trama tras el canal configurado (flujo de ruido = índice de fotograma)."""
        return [transmit_frame(frame, self.config.channel, stream=i) for i, frame in enumerate(coded)]

    def _decode_vectors(self, payload):
        local = {s.basis_id: s.basis for s in payload.of_type(BASIS)}
        task, perceptual = [], []
        for s in payload.streams:
            if s.stream_type not in (TASK, PERCEPTUAL):
                continue
            basis = local.get(s.basis_id) or self.registry.by_id(s.basis_id)
            if basis is None:
                raise PayloadError(f"Base desconocida en el receptor: {s.basis_id}")
            if s.rank > basis.rank:
                raise DimensionError(f"El flujo usa rango {s.rank} y la base solo tiene {basis.rank}.")
            tensor = reconstruct(truncate_basis(basis, s.rank), s.vectors()).astype(np.float32)
            (task if s.stream_type == TASK else perceptual).append(tensor)
        return task, perceptual

    def _decode_coded(self, payload):
        task, perceptual, source = [], [], []
        for s in payload.of_type(CODED):
            image = dct_baseline_decode(s.data)
            {ROLE_TASK: task, ROLE_PERCEPTUAL: perceptual}.get(s.role, source).append(image)
        return task, perceptual, source

    def _receive_frame(self, frame, llrs, shape, seed):
        result = ldpc_decode(self.code, llrs, self.config.max_iters, self.config.normalization)
        data = bits_to_bytes(unframe_bits(frame, result.message))
        converged = bool(np.all(result.converged))
        iterations = int(np.sum(result.iterations))
        try:
            payload = deserialize_payload(data)
        except PayloadError as e:
            log_warning(f"Payload irrecuperable: {e}")
            return ReceivedFrame(None, [], np.zeros(shape), None, converged, iterations)

        # bytes cubiertos por palabras código sin converger
        bad = np.zeros(len(data) + 1, dtype=bool)
        k_bytes = self.code.k / 8
        for j in np.flatnonzero(~np.atleast_1d(result.converged)):
            bad[int(j * k_bytes):int(np.ceil((j + 1) * k_bytes))] = True
        valid = [not bad[a:b].any() for a, b in stream_spans(payload)]

        text_parts = [d.decode("utf-8", errors="replace") for d in payload.text_segments]
        text = " ".join(text_parts) if text_parts else None
        try:
            if self.config.method == "traditional":
                _, _, source = self._decode_coded(payload)
                image = source[0] if source else np.zeros(shape)
            else:
                if self.config.method == "gsc":
                    task, perceptual = self._decode_vectors(payload)
                else:
                    task, perceptual, _ = self._decode_coded(payload)
                image = self.adapter("generator").generate(task, perceptual, text, shape, seed)
            if not np.all(np.isfinite(image)):
                raise PayloadError("la reconstrucción contiene valores no finitos")
        except (AdapterError, CodecError, PayloadError, DimensionError) as e:
            log_warning(f"Flujos inválidos en recepción: {e}")
            return ReceivedFrame(payload, [False] * len(valid), np.zeros(shape), text, converged, iterations)
        return ReceivedFrame(payload, valid, image, text, converged, iterations)

    def receive(self, coded, llrs=None, seed=0, name="destino"):
        """
        Decodifica LDPC, deserializa, reconstruye y genera el destino ŝ. Solo usa las
        tramas recibidas, su entramado y la configuración del pipeline.

        Args:
            coded (list): Tramas CodedFrame, una por fotograma.
            llrs (list, opcional): LLRs por fotograma; por defecto se pasa por el canal.
            seed (int): Semilla para generadores estocásticos.
            name (str): Nombre del elemento destino.

        Returns:
            Reception: Elemento destino y estado por fotograma y flujo.

        Raises:
            PayloadError: Si una trama no declara la forma de su fotograma.
        """
        coded = list(coded)
        if any(frame.shape is None for frame in coded):
            raise PayloadError("Trama sin forma de fotograma: no se puede generar el destino.")
        llrs = self.channel_llrs(coded) if llrs is None else llrs
        frames = [self._receive_frame(frame, l, frame.shape, seed) for frame, l in zip(coded, llrs)]
        stages = [FlopStage("ldpc_decode", {"iterations": sum(f.iterations for f in frames),
                                            "edges": self.code.edges})]
        generator = self._adapters.get("generator")
        if generator is not None and generator.last_flops:
            stages.append(FlopStage("adapter", {"flops": generator.last_flops * len(frames)}))
        destination = SourceItem(name, [f.image for f in frames])
        if not all(f.valid for f in frames):
            log_warning(f"{name}: recepción con flujos inválidos.")
        return Reception(destination, frames, stages)

    # --- evaluación ----------------------------------------------------------

    def _semantic_nmse(self, tx, rx):
        extractor = self.adapter("extractor")
        embedder = self.adapter("embedder")
        values = []
        for i, (src, dst) in enumerate(zip(tx.item.frames, rx.item.frames)):
            metadata = tx.item.frame_metadata(i)
            has_task = bool(tx.extracted[i].task) if tx.extracted else bool(extractor.extract(src, metadata).task)
            if has_task:
                values.append(semantic_nmse(src, dst, lambda img: extractor.extract(img, metadata).task))
            elif embedder is not None:
                values.append(nmse(embedder.embed(src), embedder.embed(dst)))
            else:
                return None
        # vídeo: media por fotograma
        return float(np.mean(values))

    def _cer(self, tx, rx):
        if not tx.extracted or all(r.text is None for r in tx.extracted):
            return None
        rates = [character_error_rate(r.text, f.text or "") for r, f in zip(tx.extracted, rx.frames)
                 if r.text]
        return float(np.mean(rates)) if rates else None

    def _nrqm(self, rx):
        adapter = self.adapter("nrqm")
        if adapter is None:
            return None
        return float(np.mean([adapter.embed(f)[0] for f in rx.item.frames]))

    def run_end_to_end(self, item, seed=0, budget_label=None):
        """
        transmit → canal → receive → métricas.

        Returns:
            MetricReport: Fila con las métricas y el cumplimiento de los umbrales.
        """
        cfg = self.config
        tx = self.transmit(item, seed)
        rx = self.receive(tx.coded, seed=seed, name=item.name)
        score, kl = perceptual_scores(item.frames, rx.item.frames)
        stages = tx.accounting.stages + rx.stages
        report = MetricReport(
            scenario=cfg.scenario, method=cfg.method,
            budget_label=str(cfg.byte_budget) if budget_label is None else budget_label,
            bytes_transmitted=tx.accounting.payload_bytes, flops_estimate=flops_estimate(stages),
            semantic_nmse=self._semantic_nmse(tx, rx), piqe=score, kl_divergence=kl,
            nrqm=self._nrqm(rx), cer=self._cer(tx, rx), seed=cfg.channel.seed, item=item.name,
            basis_mode=cfg.basis_mode if cfg.method == "gsc" else "",
            status="ok" if rx.valid else "corrupt",
        )
        checks = constraint_checks(report, cfg.semantic_nmse_max, cfg.piqe_max)
        report = replace(report, **checks)
        if not checks["task_pass"]:
            log_warning(f"{item.name}: semantic-NMSE {report.semantic_nmse} supera {cfg.semantic_nmse_max}.")
        return report


# --- funciones de conveniencia ---------------------------------------------------

def transmit(item, config, pipeline=None, seed=0):
    """Transmite un elemento con un pipeline nuevo (o el dado)."""
    if pipeline is not None:
        return pipeline.transmit(item, seed)
    with Pipeline(config) as p:
        return p.transmit(item, seed)


def run_end_to_end(item, config, registry=None, seed=0):
    """Ejecución completa de un elemento con un pipeline propio."""
    with Pipeline(config, registry) as p:
        return p.run_end_to_end(item, seed)


def safe_run(pipeline, item, seed=0, budget_label=None):
    """Como run_end_to_end, pero un fallo se devuelve como fila con status 'failed'."""
    try:
        return pipeline.run_end_to_end(item, seed, budget_label)
    except (GSCError, ValueError) as e:
        cfg = pipeline.config
        log_warning(f"Celda fallida ({cfg.method}, {cfg.byte_budget}, {item.name}): {e}")
        return MetricReport(cfg.scenario, cfg.method,
                            str(cfg.byte_budget) if budget_label is None else budget_label,
                            0, 0, seed=cfg.channel.seed, item=item.name,
                            basis_mode=cfg.basis_mode if cfg.method == "gsc" else "",
                            status="failed")
