import csv
import json

from conftest import make_scene
from gsc.items import write_image
from interface.cli import EXIT_FAILED, EXIT_OK, EXIT_USAGE, main


def _experiment(tmp_path, budgets=(8000,)):
    folder = tmp_path / "items"
    folder.mkdir(exist_ok=True)
    write_image(str(folder / "escena.pgm"), make_scene())
    path = tmp_path / "experimento.json"
    path.write_text(json.dumps({
        "name": "cli",
        "dataset": str(folder),
        "methods": [{"label": "gsc", "pipeline": {"channel": {"snr_db": "noiseless"}}}],
        "budgets": list(budgets),
        "output": str(tmp_path / "salida"),
    }), encoding="utf-8")
    return str(path)


def test_lista_de_adaptadores(capsys):
    assert main(["adapters", "list"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "builtin:identity\textract,generate" in out
    assert "builtin:road" in out


def test_comprobar_adaptador(capsys):
    assert main(["adapters", "check", "builtin:depth-proxy"]) == EXIT_OK
    assert "embed,extract" in capsys.readouterr().out
    assert main(["adapters", "check"]) == EXIT_USAGE
    assert main(["adapters", "check", "builtin:no-existe"]) == EXIT_USAGE


def test_curva_ber_a_archivo(tmp_path):
    out = tmp_path / "ber.csv"
    assert main(["ber", "--code", "qc36-z8", "--snr", "noiseless,0", "--bits", "1000", "--seed", "4",
                 "--out", str(out)]) == EXIT_OK
    with open(out, newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert [r["snr_db"] for r in rows] == ["noiseless", "0.0"]
    assert rows[0]["bit_errors"] == "0" and rows[0]["code_id"] == "qc36-z8"


def test_run_y_report(tmp_path, capsys):
    config = _experiment(tmp_path)
    assert main(["run", config]) == EXIT_OK
    assert (tmp_path / "salida" / "raw" / "rows.csv").is_file()
    capsys.readouterr()
    assert main(["report", str(tmp_path / "salida")]) == EXIT_OK
    assert capsys.readouterr().out.startswith("scenario,method,budget_bytes")
    assert main(["report", str(tmp_path / "salida"), "--svg"]) == EXIT_OK
    assert (tmp_path / "salida" / "plots" / "piqe.svg").is_file()


def test_sweep_con_celda_fallida(tmp_path):
    config = _experiment(tmp_path)
    output = tmp_path / "barrido"
    assert main(["sweep", config, "--budgets", "6,8000", "--seeds", "1,2", "--output", str(output)]) == EXIT_FAILED
    with open(output / "results.csv", newline="", encoding="utf-8") as f:
        rows = list(csv.DictReader(f))
    assert len(rows) == 4
    assert {r["status"] for r in rows if r["budget_bytes"] == "6"} == {"failed"}


def test_configuracion_invalida(tmp_path):
    path = tmp_path / "mala.json"
    path.write_text(json.dumps({"name": "x"}), encoding="utf-8")
    assert main(["run", str(path)]) == EXIT_USAGE
    assert main(["sweep", _experiment(tmp_path), "--budgets", "3"]) == EXIT_USAGE
    assert main(["report", str(tmp_path / "no-existe")]) == EXIT_USAGE
