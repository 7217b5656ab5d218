from __future__ import annotations

import argparse
import logging
import sys

from .config import OPTIONS, ConfigError, dump_file, parse_and_validate


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lwsim",
        description="Packet-level simulator of LTE-WLAN aggregation (LWA) and LWIP offload.",
    )
    parser.add_argument("--config", metavar="PATH", help="JSON file with flat dotted keys")
    parser.add_argument("--dump-config", metavar="PATH",
                        help="write the effective configuration to PATH and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    for opt in OPTIONS:
        kwargs = {"dest": opt.attr, "default": None, "help": opt.help}
        if opt.choices:
            kwargs["choices"] = opt.choices
            if all(isinstance(c, int) for c in opt.choices):
                kwargs["type"] = int
        parser.add_argument(opt.flag, **kwargs)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cli_values = {o.attr: getattr(args, o.attr) for o in OPTIONS}
    try:
        cfg = parse_and_validate(cli_values, args.config)
    except ConfigError as e:
        print(f"lwsim: configuration error: {e}", file=sys.stderr)
        return 2
    if args.dump_config:
        dump_file(cfg, args.dump_config)
        return 0

    # imported late so --help and config errors stay cheap
    from .scenario import run_scenario
    from .wire import run_enb, run_sta

    try:
        if cfg.role == "enb":
            result = run_enb(cfg)
        elif cfg.role == "sta":
            result = run_sta(cfg, announce=lambda msg: print(msg, flush=True))
        else:
            result = run_scenario(cfg)
    except OSError as e:
        print(f"lwsim: I/O error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # invariant violations inside the pipeline
        print(f"lwsim: internal error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1
    sys.stdout.write(result.flows_text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
