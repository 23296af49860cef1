"""
cli.py

Interfaz de línea de órdenes del simulador (programa ``gsc``):

    gsc run <config.json>
    gsc sweep <config.json> [--budgets ...] [--seeds ...] [--workers N]
    gsc ber --code <id|alist> --snr <lista> --bits <n> --seed <s> [--modulation BPSK|QPSK]
    gsc report <directorio> [--csv | --svg]
    gsc adapters list
    gsc adapters check <spec>

El código de salida es 0 si todo fue bien, 1 si alguna celda falló y 2 ante errores
de configuración o de uso.
"""

import argparse
import json
import os
import sys

sys.path.append(os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))

from gsc import __version__  # noqa: E402
from gsc.adapters import list_builtins, open_adapter  # noqa: E402
from gsc.channel import NOISELESS, ChannelConfig, ber_sweep  # noqa: E402
from gsc.config import load_config, parse_config  # noqa: E402
from gsc.errors import GSCError  # noqa: E402
from gsc.ldpc import DEFAULT_CODE_ID, resolve_code  # noqa: E402
from gsc.report import emit_csv, emit_plots, read_results, write_ber_csv  # noqa: E402
from gsc.system import SistemaGSC  # noqa: E402
from utils.logger import log_error, log_info  # noqa: E402

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _snr_list(text):
    return [v.strip() if v.strip() == NOISELESS else float(v) for v in text.split(",") if v.strip()]


def _experiment(config, output=None):
    sistema = SistemaGSC(config)
    results = sistema.ejecutar()
    carpeta = sistema.guardar_estado(output)
    print(f"Resultados en {carpeta}: {len(results.rows)} filas, {len(results.aggregates)} agregadas.")
    return EXIT_FAILED if results.failed else EXIT_OK


def cmd_run(args):
    return _experiment(load_config(args.config), args.output)


def cmd_sweep(args):
    config = load_config(args.config)
    update = {}
    if args.budgets:
        update["budgets"] = args.budgets
    if args.seeds:
        update["seeds"] = args.seeds
    if args.workers:
        update["workers"] = args.workers
    # revalida el documento completo con los cambios
    config = parse_config(json.dumps(dict(config.echo(), **update)))
    return _experiment(config, args.output)


def cmd_ber(args):
    code = resolve_code(args.code)
    config = ChannelConfig(10.0, args.modulation, args.seed)
    rows = ber_sweep(code, args.snr, config, args.bits, args.max_iters)
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as f:
            write_ber_csv(rows, f)
        log_info(f"Curva BER escrita en {args.out}.")
    else:
        write_ber_csv(rows, sys.stdout)
    return EXIT_OK


def cmd_report(args):
    results = read_results(args.results)
    if args.svg:
        for path in emit_plots(results.aggregates, os.path.join(args.results, "plots")):
            print(path)
        return EXIT_OK
    path = os.path.join(args.results, "results.csv")
    emit_csv(results.aggregates, path)
    with open(path, "r", encoding="utf-8") as f:
        sys.stdout.write(f.read())
    return EXIT_FAILED if results.failed else EXIT_OK


def cmd_adapters(args):
    if args.action == "list":
        for name, capabilities in list_builtins():
            print(f"builtin:{name}\t{','.join(capabilities)}")
        return EXIT_OK
    if not args.spec:
        raise GSCError("'adapters check' necesita una especificación de adaptador.")
    with open_adapter(args.spec) as adapter:
        capabilities = adapter.handshake()
    print(f"{args.spec}\t{','.join(sorted(capabilities))}\t"
          f"{'estocástico' if adapter.stochastic else 'determinista'}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="gsc", description="Simulador de comunicación semántica generativa.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Ejecuta un experimento.")
    run.add_argument("config")
    run.add_argument("--output", help="Directorio de resultados (por defecto el de la configuración).")
    run.set_defaults(func=cmd_run)

    sweep = sub.add_parser("sweep", help="Barrido de presupuestos y semillas sobre un experimento.")
    sweep.add_argument("config")
    sweep.add_argument("--budgets", type=_int_list, help="Presupuestos en bytes separados por comas.")
    sweep.add_argument("--seeds", type=_int_list, help="Semillas separadas por comas.")
    sweep.add_argument("--workers", type=int)
    sweep.add_argument("--output")
    sweep.set_defaults(func=cmd_sweep)

    ber = sub.add_parser("ber", help="Curva BER de un código LDPC.")
    ber.add_argument("--code", default=DEFAULT_CODE_ID, help="Identificador qc36-z<z> o ruta a un alist.")
    ber.add_argument("--snr", type=_snr_list, required=True, help="Es/N0 en dB separadas por comas.")
    ber.add_argument("--bits", type=int, default=100000, help="Bits de información por punto.")
    ber.add_argument("--seed", type=int, default=1)
    ber.add_argument("--modulation", choices=["BPSK", "QPSK"], default="BPSK")
    ber.add_argument("--max-iters", type=int, default=25)
    ber.add_argument("--out", help="CSV de salida (por defecto la salida estándar).")
    ber.set_defaults(func=cmd_ber)

    report = sub.add_parser("report", help="Regenera el CSV o las gráficas de un directorio de resultados.")
    report.add_argument("results")
    fmt = report.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_true", default=True)
    fmt.add_argument("--svg", action="store_true")
    report.set_defaults(func=cmd_report)

    adapters = sub.add_parser("adapters", help="Lista o comprueba adaptadores.")
    adapters.add_argument("action", choices=["list", "check"])
    adapters.add_argument("spec", nargs="?")
    adapters.set_defaults(func=cmd_adapters)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except GSCError as e:
        log_error(str(e))
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
