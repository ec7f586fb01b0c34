"""Command line interface: ``maxdet <subcommand> [options]``.

Every subcommand builds a :class:`Report` (a config header plus a table of
strings) and prints it as CSV, JSON or aligned text. CSV output starts with a
``# config: {...}`` comment line carrying the full run configuration, so a run
can be repeated from its own output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import __version__
from .bounds import (
    METHODS,
    TABLE2_HEADER,
    bound_table,
    example668,
    kms_d3_crossover,
    scan_hn_inequality,
    scan_thm1_positivity,
    sig3,
    truncate_sig,
    table1,
    table2,
)
from .exact_stats import e_abs_s1s2_bruteforce, e_abs_s1s2_closed, format_fraction, moments
from .hadamard import default_registry
from .signmatrix import SignMatrix, read_matrix

SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class Report:
    """One run's output: configuration, column names and string cells."""

    command: str
    config: dict
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]
    ok: bool = True
    extra: dict | None = None  # structured payload for JSON (e.g. a TrialStats dict)


# -- output --------------------------------------------------------------------

def emit_csv(report: Report) -> str:
    buf = io.StringIO()
    head = {"command": report.command, **report.config}
    buf.write("# config: " + json.dumps(head, sort_keys=True, ensure_ascii=False) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(report.columns)
    w.writerows(report.rows)
    return buf.getvalue()


def parse_csv(text: str) -> Report:
    """Inverse of :func:`emit_csv`."""
    first, _, body = text.partition("\n")
    if not first.startswith("# config: "):
        raise ValueError("missing '# config:' header line")
    config = json.loads(first[len("# config: "):])
    command = config.pop("command")
    rows = list(csv.reader(io.StringIO(body)))
    if not rows:
        raise ValueError("missing column header")
    return Report(command, config, tuple(rows[0]), tuple(tuple(r) for r in rows[1:]))


def emit_json(report: Report) -> str:
    doc = {
        "schema": SCHEMA,
        "command": report.command,
        "config": report.config,
        "ok": report.ok,
    }
    if report.extra is not None:
        doc["result"] = report.extra
    else:
        doc["columns"] = list(report.columns)
        doc["rows"] = [list(r) for r in report.rows]
    return json.dumps(doc, indent=2, sort_keys=False, ensure_ascii=False) + "\n"


def emit_text(report: Report) -> str:
    cfg = " ".join(f"{k}={v}" for k, v in report.config.items())
    lines = [f"# {report.command} {cfg}".rstrip()]
    table = [report.columns, *report.rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(report.columns))]
    for r in table:
        lines.append("  ".join(c.rjust(w) for c, w in zip(r, widths)).rstrip())
    return "\n".join(lines) + "\n"


def render(report: Report, fmt: str) -> str:
    return {"csv": emit_csv, "json": emit_json, "text": emit_text}[fmt](report)


# -- helpers -------------------------------------------------------------------

def _registry(args):
    return default_registry(args.registry)


def _core(args) -> SignMatrix:
    if args.matrix:
        a = read_matrix(args.matrix)
    else:
        a = _registry(args).matrix(args.h)
    if args.h is not None and a.rows != args.h:
        raise UsageError(f"core matrix has order {a.rows}, not --h {args.h}")
    return a


def _need(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} requires {', '.join(missing)}")


def _config(args, *names) -> dict:
    out = {}
    for n in names:
        v = getattr(args, n)
        out[n] = str(v) if isinstance(v, Fraction) else v
    return out


def _workers(args) -> int:
    return args.workers if args.workers else (os.cpu_count() or 1)


def _frac_parts(x: Fraction) -> tuple[str, str]:
    return str(x.numerator), str(x.denominator)


# -- subcommands -----------------------------------------------------------------

def cmd_bound(args) -> Report:
    _need(args, "n")
    methods = tuple(m.strip() for m in args.methods.split(",")) if args.methods else ("kms", "bo", "thm1", "thm2")
    bad = [m for m in methods if m not in METHODS]
    if bad:
        raise UsageError(f"unknown method(s) {bad}; choose from {', '.join(METHODS)}")
    reports = bound_table([args.n], methods, _registry(args))
    rows = tuple(
        (str(r.n), str(r.h), str(r.d), r.method, r.r_text(args.precision), r.dbar_text(3), r.error or "")
        for r in reports
    )
    return Report("bound", _config(args, "n", "methods", "registry", "precision"),
                  ("n", "h", "d", "method", "R", "Dbar", "error"), rows)


def cmd_table1(args) -> Report:
    return Report("table1", {}, ("d", "KMS", "B&O", "Thm2"), tuple(table1()))


def cmd_table2(args) -> Report:
    rows = tuple(tuple(r.cells(args.precision)) for r in table2(_registry(args)))
    return Report("table2", _config(args, "registry", "precision"), TABLE2_HEADER, rows)


def cmd_example668(args) -> Report:
    ex = example668(_registry(args))
    labels = {
        "bordering": "bordering construction",
        "minors": "Hadamard minors",
        "thm1": "Theorem 1 (sharp form)",
        "conjectured": "conjectured (pi e/2)^(-d/2)",
    }
    # three significant figures by truncation, as the published values are
    rows = tuple((k, labels[k], sig3(truncate_sig(v)), repr(v)) for k, v in ex.values().items())
    cfg = {"n": ex.n, "h": ex.h, "h_plus": ex.h_plus, "registry": args.registry}
    return Report("example668", cfg, ("key", "quantity", "R", "R_full"), rows)


def cmd_stats(args) -> Report:
    _need(args, "h")
    m = moments(args.h)
    rows = tuple(
        (name, str(x), format_fraction(x).split(" ~ ")[-1])
        for name, x in (("mu", m.mu), ("sigma2", m.sigma2), ("E[f_ii^2]", m.e_fii_sq),
                        ("mean_gij", m.MEAN_OFFDIAG), ("var_gij", m.VAR_OFFDIAG))
    )
    return Report("stats", _config(args, "h"), ("quantity", "exact", "decimal"), rows)


def cmd_simulate(args) -> Report:
    from .sampler import enumerate_stats, mc_stats

    _need(args, "h", "d")
    a = _core(args)
    if args.exhaustive:
        stats = enumerate_stats(a, args.d, args.lam)
    else:
        _need(args, "trials")
        stats = mc_stats(a, args.d, args.trials, args.seed, lam=args.lam, workers=_workers(args))
    data = stats.to_dict()
    if args.log:
        log = cmd_sample(args, trials=min(stats.trials, args.trials or stats.trials))
        with open(args.log, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(emit_csv(log))
    rows = tuple((k, "" if v is None else str(v)) for k, v in data.items())
    cfg = _config(args, "h", "d", "trials", "seed", "exhaustive", "lam", "registry")
    return Report("simulate", cfg, ("field", "value"), rows, extra=data)


def cmd_sample(args, trials: int | None = None) -> Report:
    """Per-trial log with D = -I: det G as a fraction, det A~, and the good flag."""
    from .sampler import GoodEvent
    from .schur import batch_det, batch_scaled_f, border_batch, det_exact, safe_int_dtype

    _need(args, "h", "d")
    trials = trials if trials is not None else args.trials
    if trials is None:
        raise UsageError("sample requires --trials")
    a = _core(args)
    h, d = a.rows, args.d
    arr = a.to_array()
    det_a = det_exact(arr)
    event = GoodEvent.make(h, d, args.lam)
    rows = []
    dtype = safe_int_dtype(h, d)
    eye = np.eye(d, dtype=bool)
    for start in range(0, trials, 4096):
        n = min(4096, trials - start)
        hg = batch_scaled_f(arr, border_batch(args.seed, start, n, h, d)) + h * np.eye(d, dtype=np.int64)
        dets = batch_det(hg.astype(dtype))
        diag, off = hg[:, eye], hg[:, ~eye]
        good = np.all((diag >= event.diag_lo) & (diag <= event.diag_hi), axis=1)
        if d > 1:
            good &= np.all(np.abs(off) <= event.off_abs, axis=1)
        for i in range(n):
            det_g = Fraction(int(dets[i]), h ** d)
            # det(D - F) = det(-G) = (-1)^d det G
            det_tilde = det_a * (-1) ** d * det_g
            rows.append((str(start + i), *_frac_parts(det_g), str(int(det_tilde)), str(int(good[i]))))
    cfg = _config(args, "h", "d", "trials", "seed", "lam", "registry")
    cfg["trials"] = trials
    return Report("sample", cfg, ("trial", "det_G_numerator", "det_G_denominator", "det_A_tilde", "good_flag"),
                  tuple(rows))


def cmd_search(args) -> Report:
    from .sampler import best_det_search

    _need(args, "h", "d")
    a = _core(args)
    res = best_det_search(a, args.d, trials=args.trials or 1000, seed=args.seed,
                          exhaustive=args.exhaustive, workers=_workers(args))
    data = {
        "h": res.h, "d": res.d, "n": res.h + res.d, "trials": res.trials,
        "best_abs_det": str(res.best_abs_det), "best_trial": res.best_trial,
        "ratio": f"{res.ratio:.{args.precision}f}", "thm1_bound": str(res.thm1_bound),
        "meets_thm1": "" if res.meets_thm1 is None else str(res.meets_thm1).lower(),
        "border": res.border.to_text(), "corner": res.corner.to_text(),
    }
    rows = tuple((k, _one_line(str(v))) for k, v in data.items())
    cfg = _config(args, "h", "d", "trials", "seed", "exhaustive", "registry")
    return Report("search", cfg, ("field", "value"), rows, ok=res.meets_thm1 is not False, extra=data)


def cmd_oracle(args) -> Report:
    from .oracle import maxdet_exhaustive

    _need(args, "n")
    try:
        rec = maxdet_exhaustive(args.n, allow_large=args.allow_large)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    return Report("oracle", _config(args, "n"), ("n", "dbar", "witness"),
                  ((str(rec.n), str(rec.dbar), _one_line(rec.witness.to_text())),))


def _one_line(matrix_text: str) -> str:
    """Matrix text with rows separated by '/' so it fits in one table cell."""
    return matrix_text.strip().replace("\n", "/")


def _oracle_text(report: Report) -> str:
    _, dbar, witness = report.rows[0]
    return f"dbar {dbar}\n" + witness.replace("/", "\n") + "\n"


# -- verify ----------------------------------------------------------------------

def _verify_stirling(args) -> list[tuple[str, ...]]:
    from mpmath import mp

    from .stirling import containment_rows

    m_max = args.m_max or (60 if args.quick else 300)
    k = args.k or args.k_terms or 5
    rows = []
    for r in containment_rows(m_max, range(1, k + 1)):
        rows.append((str(r.m), str(r.k), mp.nstr(r.lo, 25), mp.nstr(r.exact.mid, 25), mp.nstr(r.hi, 25),
                     "true" if r.passed else "false"))
    return rows


def _check(name: str, ok: bool, detail: str = "") -> tuple[str, ...]:
    return (name, "pass" if ok else "FAIL", detail)


def _verify_suite(args) -> list[tuple[str, ...]]:
    from .hadamard import is_hadamard, paley_i, paley_ii, sylvester
    from .oracle import check_bounds_vs_oracle, maxdet_exhaustive
    from .sampler import enumerate_stats, mc_stats, verify_good_bound
    from .schur import sample_border, schur_identity_check, minus_identity, u_row_norms
    from .stirling import check_mu_sigma_inequalities, containment_rows

    quick = args.quick
    out = []
    mats = [sylvester(k) for k in range(1, 6)] + [paley_i(q) for q in (3, 7, 11, 19)] + [paley_ii(q) for q in (5, 13)]
    out.append(_check("hadamard constructions", all(is_hadamard(m) for m in mats), f"{len(mats)} matrices"))

    ks = range(1, 7 if quick else 9)
    out.append(_check("double sum identity", all(e_abs_s1s2_bruteforce(k) == e_abs_s1s2_closed(k) for k in ks),
                      f"k=1..{ks[-1]}"))

    m_max = 60 if quick else 300
    bad = [r for r in containment_rows(m_max) if not r.passed]
    out.append(_check("stirling containment", not bad, f"m<={m_max}, k<=5"))

    h_max = 512 if quick else 2048
    rep = check_mu_sigma_inequalities(h_max)
    out.append(_check("mu/sigma2 inequalities", rep.ok, f"h<={h_max}"))

    scan_h = 400 if quick else 2000
    hn = scan_hn_inequality(scan_h, 10)
    out.append(_check("(h/n)^n inequality", not hn, f"h<={scan_h}, d<=10"))
    pos = scan_thm1_positivity(scan_h, 10)
    out.append(_check("thm1 positivity threshold", not pos, f"h<={scan_h}, d<=10"))

    a8 = sylvester(3)
    ok = True
    for seed in range(10 if quick else 50):
        s = sample_border(a8, 2, seed)
        ok &= schur_identity_check(a8, s, minus_identity(2))
        ok &= all(x == 1 for x in u_row_norms(a8, s.C))
    out.append(_check("schur identity and U row norms", bool(ok)))

    stats_ok = True
    for h, d in ((4, 1), (4, 2), (8, 1), (8, 2)):
        st = enumerate_stats(sylvester(h.bit_length() - 1), d)
        m = moments(h)
        stats_ok &= st.mean_gii == m.mu and st.var_gii == m.sigma2
        if d > 1:
            stats_ok &= st.mean_gij == 0 and st.var_gij == 1
    out.append(_check("exhaustive moments", bool(stats_ok), "(4,1),(4,2),(8,1),(8,2)"))

    good = [verify_good_bound(sylvester(k), 2, exhaustive=True) for k in (2, 3)]
    out.append(_check("good event bound", all(g.ok for g in good), "(4,2),(8,2) exhaustive"))
    rate = mc_stats(sylvester(4), 2, 2000 if quick else 10_000, seed=1, workers=1).good_rate
    out.append(_check("good event rate (16,2)", rate > 0, f"{float(rate):.4f}"))

    n_max = 5 if quick else 6
    dbars = [maxdet_exhaustive(n).dbar for n in range(1, n_max + 1)]
    out.append(_check("oracle values", dbars == [1, 2, 4, 16, 48, 160][:n_max], str(dbars)))
    if quick:
        out.append(_check("bounds below oracle", True, "skipped in quick mode"))
    else:
        try:
            check_bounds_vs_oracle()
            out.append(_check("bounds below oracle", True))
        except AssertionError as exc:
            out.append(_check("bounds below oracle", False, str(exc)))

    out.append(_check("d=3 crossover", kms_d3_crossover(135) and not kms_d3_crossover(131), "131 fails, 135 holds"))
    t2 = [tuple(r.cells()) for r in table2()]
    out.append(_check("table2 thm2 column", [r[4] for r in t2] == ["0.3752", "0.3609", "0.3498", "0.2897",
                                                                    "0.2524", "0.2342"]))
    return out


def cmd_verify(args) -> Report:
    what = args.target
    cfg = _config(args, "target", "quick", "m_max", "k")
    if what == "stirling":
        rows = _verify_stirling(args)
        return Report("verify", cfg, ("m", "k", "lo", "exact", "hi", "pass"), tuple(rows),
                      ok=all(r[-1] == "true" for r in rows))
    rows = _verify_suite(args)
    return Report("verify", cfg, ("check", "result", "detail"), tuple(rows), ok=all(r[1] == "pass" for r in rows))


COMMANDS = {
    "bound": (cmd_bound, "lower bounds on R(n) and Dbar(n) for one n"),
    "table1": (cmd_table1, "asymptotic constants by gap d"),
    "table2": (cmd_table2, "lower bounds on R(n) for d = 2"),
    "example668": (cmd_example668, "the four bounds at n = 668"),
    "stats": (cmd_stats, "exact moments of G for one h"),
    "simulate": (cmd_simulate, "Monte Carlo or exhaustive moments of G"),
    "sample": (cmd_sample, "per-trial CSV log of det G, det A~ and the good flag"),
    "search": (cmd_search, "largest bordered determinant over sampled borders"),
    "oracle": (cmd_oracle, "exact Dbar(n) for n <= 6"),
    "verify": (cmd_verify, "run invariant checks"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int)
    common.add_argument("--h", type=int)
    common.add_argument("--d", type=int)
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--workers", type=int, default=0, help="processes (default: all CPUs)")
    common.add_argument("--registry", help="file of Hadamard orders (overrides $MAXDET_REGISTRY)")
    common.add_argument("--format", choices=("csv", "json", "text"), default=None)
    common.add_argument("--methods", help=f"comma list from {','.join(METHODS)}")
    common.add_argument("--k-terms", type=int)
    common.add_argument("--exhaustive", action="store_true")
    common.add_argument("--precision", type=int, default=4, help="decimal places for ratios")
    common.add_argument("--lambda", dest="lam", type=Fraction, default=None, help="good-event threshold (default d)")
    common.add_argument("--matrix", help="core Hadamard matrix in text format")
    common.add_argument("--log", help="write the per-trial CSV log here (simulate)")
    common.add_argument("--allow-large", action="store_true", help="let oracle run n = 7")

    p = argparse.ArgumentParser(prog="maxdet", description="Bordered Hadamard lower bounds for the maximal determinant.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", metavar="command")
    for name, (_, helptext) in COMMANDS.items():
        sp = sub.add_parser(name, parents=[common], help=helptext)
        if name == "verify":
            sp.add_argument("target", choices=("stirling", "all"))
            sp.add_argument("--quick", action="store_true")
            sp.add_argument("--m-max", type=int)
            sp.add_argument("--k", type=int)
    return p


DEFAULT_FORMAT = {"simulate": "json", "search": "json", "oracle": "text"}


def run(argv: list[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    if not args.command:
        parser.print_usage(err)
        return EXIT_USAGE
    fmt = args.format or DEFAULT_FORMAT.get(args.command, "csv")
    fn = COMMANDS[args.command][0]
    try:
        report = fn(args)
    except UsageError as exc:
        parser.print_usage(err)
        err.write(f"maxdet {args.command}: {exc}\n")
        return EXIT_USAGE
    if args.command == "oracle" and fmt == "text":
        out.write(_oracle_text(report))
    else:
        out.write(render(report, fmt))
    out.flush()
    return EXIT_OK if report.ok else EXIT_FAIL


def main(argv: list[str] | None = None) -> None:
    if hasattr(sys.stdout, "reconfigure"):
        sys.stdout.reconfigure(encoding="utf-8", newline="\n")
    sys.exit(run(argv))
