"""
adapter_server.py

Sirve un adaptador integrado por stdin/stdout con el protocolo de tramas, de modo que
los integrados puedan usarse como adaptadores externos:

    python -m gsc.adapter_server depth-proxy
"""

import argparse
import sys

from gsc.adapters import BUILTINS, dispatch
from gsc.errors import ProtocolError
from gsc.protocol import read_frame, write_frame
from utils.logger import log_error, log_info


def serve(backend, stdin, stdout):
    """
    Atiende peticiones hasta ``shutdown`` o fin de flujo.

    Returns:
        int: Código de salida (0 normal, 2 error de protocolo).
    """
    while True:
        try:
            frame = read_frame(stdin)
        except ProtocolError as e:
            log_error(f"Servidor {backend.name}: {e}")
            write_frame(stdout, {"op": None, "request_id": None, "ok": False, "error": str(e)})
            return 2
        if frame is None:
            return 0
        header, tensors = frame
        response, out = dispatch(backend, header, tensors)
        write_frame(stdout, response, out)
        if header.get("op") == "shutdown":
            return 0


def main(argv=None):
    parser = argparse.ArgumentParser(prog="gsc-adapter", description="Servidor de adaptadores integrados.")
    parser.add_argument("name", choices=sorted(BUILTINS))
    args = parser.parse_args(argv)
    log_info(f"Sirviendo el adaptador integrado {args.name} por stdin/stdout.")
    return serve(BUILTINS[args.name](), sys.stdin.buffer, sys.stdout.buffer)


if __name__ == "__main__":
    sys.exit(main())
