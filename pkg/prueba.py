import json
import os

from gsc.config import parse_config
from gsc.system import SistemaGSC

RAIZ = os.path.dirname(os.path.abspath(__file__))


def test_sistema():
    with open(os.path.join(RAIZ, "data", "experimento.json"), "r", encoding="utf-8") as f:
        datos = json.load(f)
    datos["dataset"] = os.path.join(RAIZ, datos["dataset"])
    sistema = SistemaGSC(parse_config(json.dumps(datos)))

    resultados = sistema.ejecutar()

    for fila in resultados.aggregates:
        print(f"{fila.method:>14} {fila.budget_label:>7} B  {fila.bytes_transmitted:>7} B  "
              f"semantic-NMSE={fila.semantic_nmse}  PIQE={fila.piqe}  {fila.status}")
    assert not resultados.failed
    assert len(resultados.aggregates) == 9

if __name__ == "__main__":
    test_sistema()
