"""Command-line client for the study service.

Without ``--server`` the request is executed in process through the same
entry point the HTTP handlers use; with ``--server URL`` it is posted to a
running service.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import urllib.error
import urllib.request
from pathlib import Path

from .config import ConfigError, load_config, parse_config_text
from .studies import ReportRow, within

log = logging.getLogger("fracplate")

SUBCOMMANDS = ("validate", "converge", "static", "modal", "export-matrices")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fracplate", description="Fractional-order nonlocal plate studies.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", type=Path, help="flat key = value study file")
        s.add_argument("--out", type=Path, help="CSV path (matrix file prefix for export-matrices)")
        s.add_argument("--threads", type=int, default=1, help="concurrent study cells")
        s.add_argument("--tolerance", type=float, default=None,
                       help="relative tolerance for flagging rows against references")
        s.add_argument("--server", default=None, help="base URL of a running study service")
    return p


def _post(url: str, payload: dict) -> dict:
    req = urllib.request.Request(url, data=json.dumps(payload).encode(), method="POST",
                                 headers={"Content-Type": "application/json"})
    try:
        with urllib.request.urlopen(req) as resp:
            return json.loads(resp.read())
    except urllib.error.HTTPError as exc:
        raise SystemExit(f"server error {exc.code}: {exc.read().decode(errors='replace')}")


def _summarize(rows: list[ReportRow], tolerance: float) -> int:
    checked = [(r, within(r, tolerance)) for r in rows]
    flagged = [r for r, ok in checked if ok is False]
    n = sum(ok is not None for _, ok in checked)
    for r in flagged:
        detail = f"change {r.value:.3f}%" if r.pct_error is None else f"error {r.pct_error:+.3f}%"
        print(f"outside tolerance: {r.theory} {r.bc} alpha={r.alpha} lf={r.lf_frac} "
              f"{r.quantity}={r.value:.5g} {detail}", file=sys.stderr)
    print(f"{n - len(flagged)} of {n} compared rows within {100 * tolerance:g}%", file=sys.stderr)
    return 1 if flagged else 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")
    study = None if args.command == "export-matrices" else args.command
    try:
        if args.config is not None:
            cfg = load_config(args.config, study=study) if study else load_config(args.config)
        else:
            cfg = parse_config_text("", study=study) if study else parse_config_text("")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = args.out or (Path(cfg.out) if cfg.out else None)

    from .service import StudyRequest, execute, export

    if args.command == "export-matrices":
        prefix = out or Path("system")
        if args.server:
            data = _post(args.server.rstrip("/") + "/matrices", cfg.model_dump())
            Path(f"{prefix}_K.mtx").write_text(data["stiffness"])
            Path(f"{prefix}_M.mtx").write_text(data["mass"])
        else:
            from .studies import export_system

            export_system(cfg, prefix)
        log.info("wrote %s_K.mtx and %s_M.mtx", prefix, prefix)
        return 0

    request = StudyRequest(config=cfg, threads=args.threads)
    if args.server:
        data = _post(args.server.rstrip("/") + "/studies", request.model_dump())
        csv_text = data["csv"]
        rows = [ReportRow(**{k: v for k, v in r.items() if k != "pct_error"}) for r in data["rows"]]
    else:
        resp = execute(request)
        csv_text = resp.csv
        rows = [ReportRow(**r.model_dump(exclude={"pct_error"})) for r in resp.rows]
    if out is not None:
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(csv_text)
        log.info("wrote %d rows to %s", len(rows), out)
    else:
        sys.stdout.write(csv_text)
    if args.tolerance is not None:
        return _summarize(rows, args.tolerance)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
