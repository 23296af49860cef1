"""
Simulación de comunicación semántica generativa (GSC): grafos semánticos, compresión
de embeddings, transmisión con LDPC sobre AWGN, reconstrucción generativa mediante
adaptadores y evaluación tasa-distorsión-percepción.
"""

__version__ = "1.0.0"
