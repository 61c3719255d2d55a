"""Command line entry point: ``emastream run|compare|inspect``.

Configuration precedence, lowest first: built-in defaults, ``--config`` file,
``EMASTREAM_<KEY>`` environment variables, ``--set key=value`` flags, and the
dedicated flags (``--input``, ``--output``, ``--engine``...).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .params import ParamError
from .pipeline import (
    ConfigError,
    DataError,
    build_config,
    env_overrides,
    parse_config_text,
    run_pipeline,
    state_json,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_DATA = 4


def _kv(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected key=value, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="emastream", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="flat key=value config file")
        p.add_argument("-i", "--input", help="KDD-99 format CSV (optionally .gz)")
        p.add_argument("-o", "--output", help="output directory")
        p.add_argument("--max-records", type=int, dest="max_records")
        p.add_argument("--normalization", choices=("minmax_initial", "none"))
        p.add_argument("--backend", choices=("numba", "numpy"))
        p.add_argument("--set", type=_kv, action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. --set N=100")

    run = sub.add_parser("run", help="run the streaming pipeline")
    common(run)
    run.add_argument("--engine", choices=("EA", "CF", "both"))

    cmp_ = sub.add_parser("compare", help="run the EA and CF engines on identical input")
    common(cmp_)

    insp = sub.add_parser("inspect", help="run and dump the final summary sets as JSON")
    common(insp)
    insp.add_argument("--engine", choices=("EA", "CF", "both"))
    insp.add_argument("--json-out", help="write JSON here instead of stdout")
    return parser


def _config_from_args(args, environ=None):
    layers = []
    if args.config:
        with open(args.config) as fh:
            layers.append(parse_config_text(fh.read()))
    layers.append(env_overrides(environ))
    layers.append(dict(args.set))
    flags = {
        "input": args.input,
        "output": args.output,
        "max_records": args.max_records,
        "normalization": args.normalization,
        "backend": args.backend,
        "engine": "both" if args.command == "compare" else getattr(args, "engine", None),
    }
    layers.append(flags)
    return build_config(*layers)


def main(argv=None, environ=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    log = logging.getLogger("emastream")
    try:
        config = _config_from_args(args, environ)
    except (ConfigError, ParamError) as exc:
        log.error("configuration: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("cannot read config: %s", exc)
        return EXIT_IO

    try:
        result = run_pipeline(config)
    except (ConfigError, ParamError) as exc:
        log.error("configuration: %s", exc)
        return EXIT_CONFIG
    except OSError as exc:
        log.error("I/O: %s", exc)
        return EXIT_IO
    except DataError as exc:
        log.error("data: %s", exc)
        return EXIT_DATA

    if args.command == "inspect":
        dump = {k: state_json(s) for k, s in result.states.items()}
        text = json.dumps(dump, indent=2, sort_keys=True)
        if args.json_out:
            with open(args.json_out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
    else:
        for kind, rows in result.rows.items():
            vals = [r.purity_all for r in rows if r.purity_all is not None]
            mean = sum(vals) / len(vals) if vals else float("nan")
            print(f"{kind}: {len(rows)} windows, mean purity_all {mean:.4f}, "
                  f"final cores {len(result.states[kind].cores)}")
        print(f"records: {result.stats.accepted} accepted, {result.stats.rejected} rejected")
        print(f"outputs: {config.output_path}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
