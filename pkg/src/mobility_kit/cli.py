"""Command-line front end: ``mobility-kit <subcommand> ...``.

Exit status is 0 on success, 1 for usage or validation problems and 2 when
an input cannot be read or an output cannot be written. Diagnostics go to
stderr; artifacts go under ``--out`` only.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

from . import __version__
from .game import (
    CAPTURE_RADIUS,
    DEFAULT_LEVELS,
    build_level_schedule,
    format_events,
    load_level_specs,
    read_boundary,
    replay,
    summarize,
)
from .kinematics import format_metrics_csv, format_metrics_jsonl, level_metrics
from .session import (
    CORE_JOINTS,
    DEFAULT_MAX_GAP_S,
    NOMINAL_RATE_HZ,
    LevelSegmentation,
    Segment,
    extract_trajectory,
    fill_gaps,
    format_gap_report,
    format_segmentation,
    parse_pose_log_with_header,
    parse_segmentation,
    serialize_pose_log,
)
from .stats import (
    POSTHOC_FAMILIES,
    RepeatedMeasures,
    friedman,
    percent_change,
    posthoc_bonferroni,
    rm_anova,
)
from .synthgen import (
    PERFECT,
    default_boundary,
    generate,
    generate_population,
    healthy_population,
    load_profiles,
)
from .tracking import (
    DEFAULT_ASSOC_TOL,
    REGISTRATION_MODES,
    ApeRow,
    ape_report,
    format_ape_csv,
)

SEED_ENV = "MOBILITY_KIT_SEED"


class InputError(Exception):
    """Unreadable input or unwritable output; maps to exit status 2."""


class _Parser(argparse.ArgumentParser):
    # no prefix matching: --level must not silently become --levels-config
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# -- file helpers -------------------------------------------------------------

def _read_bytes(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None


def _read_text(path) -> str:
    try:
        return _read_bytes(path).decode("utf-8")
    except UnicodeDecodeError:
        raise ValueError(f"{path}: not UTF-8 text") from None


def _load(path, loader):
    """Run a path-taking loader, mapping OS failures to InputError and
    prefixing validation errors with the path."""
    try:
        return loader(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


class _Out:
    def __init__(self, root):
        self.root = Path(root)
        try:
            self.root.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise InputError(f"cannot create {self.root}: {exc.strerror or exc}") from None
        self.written: list[str] = []

    def write(self, name: str, text: str) -> None:
        path = self.root / name
        try:
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        except OSError as exc:
            raise InputError(f"cannot write {path}: {exc.strerror or exc}") from None
        self.written.append(name)


def _read_pose_log(path):
    data = _read_bytes(path)
    try:
        return parse_pose_log_with_header(data)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _segments(path, level_duration):
    text = _read_text(path)
    try:
        return parse_segmentation(text, level_duration)
    except ValueError as exc:
        raise ValueError(f"{path}: {exc}") from None


def _resolve_seed(seed):
    if seed is not None:
        return seed
    env = os.environ.get(SEED_ENV)
    if env is None or env.strip() == "":
        return 0
    try:
        return int(env)
    except ValueError:
        raise ValueError(f"{SEED_ENV} must be an integer, got {env!r}") from None


def _levels(args):
    specs = _load(args.levels_config, load_level_specs) if args.levels_config else dict(DEFAULT_LEVELS)
    if getattr(args, "level", None):
        unknown = [lv for lv in args.level if lv not in specs]
        if unknown:
            raise ValueError(f"unknown level {unknown[0]!r}; known: {', '.join(specs)}")
        return [specs[lv] for lv in args.level]
    return list(specs.values())


def _boundary(args):
    return _load(args.boundary, read_boundary) if args.boundary else default_boundary()


def _joints(text):
    return [j.strip() for j in text.split(",") if j.strip()] if text else [str(j) for j in CORE_JOINTS]


def _csv_text(header, rows) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return out.getvalue()


def _num(x) -> str:
    return "" if x is None else repr(float(x))


# -- subcommands --------------------------------------------------------------

def cmd_simulate(args) -> int:
    specs = _levels(args)
    boundary = _boundary(args)
    seed = _resolve_seed(args.seed)
    samples = seg = None
    if args.pose_log:
        _, samples = _read_pose_log(args.pose_log)
        if args.segments:
            seg = _segments(args.segments, max(s.duration for s in specs))
        elif len(specs) > 1:
            raise ValueError("replaying a pose log over several levels needs --segments (or one --level)")
    profile = PERFECT
    if args.profiles:
        profiles = {p.name: p for p in _load(args.profiles, load_profiles)}
        name = args.profile or next(iter(profiles))
        if name not in profiles:
            raise ValueError(f"profile {name!r} not in {args.profiles}")
        profile = profiles[name]
    elif args.profile:
        raise ValueError("--profile needs --profiles")

    out = _Out(args.out)
    rows = []
    for spec in specs:
        script = build_level_schedule(spec, boundary, seed)
        out.write(f"script_{spec.id}.jsonl", script.to_jsonl())
        offset = 0.0
        if samples is None:
            stream = generate(profile, script, boundary).samples
            out.write(f"pose_{spec.id}.jsonl", serialize_pose_log(stream, NOMINAL_RATE_HZ))
        else:
            stream = samples
            if seg is not None:
                try:
                    offset = seg.window(spec.id)[0]
                except KeyError:
                    raise ValueError(f"segmentation has no window for {spec.id}") from None
        events = replay(script, stream, args.capture_radius, t_offset=offset)
        out.write(f"events_{spec.id}.jsonl", format_events(events))
        s = summarize(events, script)
        rows.append([s.level, s.targets_total, s.targets_hit, repr(s.completion_fraction)])
    out.write("completion.csv", _csv_text(["level", "targets_total", "targets_hit", "completion_fraction"], rows))
    return 0


def cmd_gen(args) -> int:
    specs = _levels(args)
    boundary = _boundary(args)
    seed = _resolve_seed(args.seed)
    if args.profiles:
        profiles = _load(args.profiles, load_profiles)
    else:
        profiles = healthy_population(args.healthy, seed=args.population_seed)
    joints = _joints(args.joints)
    corpus = generate_population(profiles, specs, seed, boundary, joints)
    out = _Out(args.out)
    if not args.metrics_only:
        for sess in corpus.sessions:
            name = sess.profile.name
            out.write(f"{name}.jsonl", serialize_pose_log(sess.samples, NOMINAL_RATE_HZ))
            out.write(f"{name}_segments.csv", format_segmentation(sess.segmentation))
    out.write("metrics_long.csv", corpus.to_long_csv())
    prov = {
        "seed": seed,
        "boundary": boundary.to_dict(),
        "levels": [{"id": s.id, "bpm": s.bpm, "movement_type": s.movement_type,
                    "hold_range": list(s.hold_range), "duration": s.duration} for s in specs],
        "profiles": [{"name": p.name, "amplitude_scale": p.amplitude_scale, "speed_scale": p.speed_scale,
                      "tremor_sd": p.tremor_sd, "reaction_delay": p.reaction_delay, "seed": p.seed}
                     for p in profiles],
        "version": __version__,
    }
    out.write("provenance.json", json.dumps(prov, indent=2, sort_keys=True) + "\n")
    return 0


def _whole_log(samples) -> LevelSegmentation:
    # one window over the full log; end is nudged past the last sample
    t0, t1 = samples[0].t, samples[-1].t
    return LevelSegmentation((Segment("session", t0, t1 + 1e-6),))


def _analysis_rate(args, header):
    if args.rate is not None:
        return args.rate
    return float(header.get("rate_hz", NOMINAL_RATE_HZ))


def cmd_analyze(args) -> int:
    header, samples = _read_pose_log(args.pose_log)
    seg = _segments(args.segments, args.level_duration) if args.segments else _whole_log(samples)
    rate = _analysis_rate(args, header)
    joints = _joints(args.joints)
    max_gap = None if args.no_gap_fill else args.max_gap
    rows = level_metrics(samples, seg, joints, rate, max_gap)
    gaps = []
    if max_gap is not None:
        for s in seg:
            for j in joints:
                try:
                    traj = extract_trajectory(samples, j, (s.start_t, s.end_t), rate)
                except ValueError:
                    continue
                gaps.extend(fill_gaps(traj, max_gap)[1])
    out = _Out(args.out)
    out.write("metrics.csv", format_metrics_csv(rows))
    out.write("metrics.jsonl", format_metrics_jsonl(rows))
    out.write("gaps.csv", format_gap_report(gaps))
    return 0


def _ape_rows(est, ref, joints, windows, mode, tol, rate):
    rows = []
    for joint in joints:
        for task, win in windows:
            try:
                e = extract_trajectory(est, joint, win, rate)
                r = extract_trajectory(ref, joint, win, rate)
            except ValueError as exc:
                rows.append(ApeRow(joint, task, None, [f"empty:{exc}"]))
                continue
            rows.extend(ape_report({(joint, task): (e, r)}, mode, tol))
    return rows


def _task_windows(args, samples):
    if args.group_by == "task":
        if not args.segments:
            raise ValueError("--group-by task needs --segments")
        seg = _segments(args.segments, args.level_duration)
        return [(s.label, (s.start_t, s.end_t)) for s in seg]
    whole = _whole_log(samples).segments[0]
    return [("all", (whole.start_t, whole.end_t))]


def cmd_eval_tracking(args) -> int:
    h_est, est = _read_pose_log(args.est)
    h_ref, ref = _read_pose_log(args.ref)
    if h_ref.get("source") != "reference":
        print(f"warning: {args.ref} header does not declare source=reference", file=sys.stderr)
    if not args.assoc_tol > 0:
        raise ValueError("--assoc-tol must be positive")
    windows = _task_windows(args, est)
    rate = float(h_est.get("rate_hz", NOMINAL_RATE_HZ))
    rows = _ape_rows(est, ref, _joints(args.joints), windows, args.mode, args.assoc_tol, rate)
    out = _Out(args.out)
    out.write("ape.csv", format_ape_csv(rows))
    return 0


def _filtered_long(text: str, where: list[str], source: str):
    reader = csv.DictReader(io.StringIO(text))
    cols = set(reader.fieldnames or ())
    if not {"subject", "condition", "value"} <= cols:
        raise ValueError(f"{source}: long-format CSV needs columns subject,condition,value")
    conds = []
    for w in where:
        key, sep, val = w.partition("=")
        if not sep or not key:
            raise ValueError(f"--where expects KEY=VALUE, got {w!r}")
        if key not in cols:
            raise ValueError(f"--where column {key!r} not in {source}")
        conds.append((key, val))
    recs = []
    for lineno, row in enumerate(reader, start=2):
        if any(row[k] != v for k, v in conds):
            continue
        try:
            recs.append((row["subject"], row["condition"], float(row["value"])))
        except (TypeError, ValueError):
            raise ValueError(f"{source}: bad value at line {lineno}") from None
    if not recs:
        raise ValueError(f"{source}: no rows left after filtering")
    return recs


def cmd_stats(args) -> int:
    recs = _filtered_long(_read_text(args.input), args.where, args.input)
    order = [c.strip() for c in args.conditions.split(",")] if args.conditions else None
    data = RepeatedMeasures.from_long(recs, order)
    results = []
    if args.test in ("rm_anova", "both"):
        results.append(rm_anova(data))
    if args.test in ("friedman", "both"):
        results.append(friedman(data, tie_correction=args.tie_correction))
    n, k = data.shape
    lines = [f"n = {n} subjects, k = {k} conditions ({', '.join(data.conditions)})"]
    rows = []
    for r in results:
        lines.append(f"{r.test}: {r.summary()}")
        rows.append([r.test, repr(r.statistic), " ".join(str(d) for d in r.df), repr(r.p), repr(r.effect), r.effect_name])
    out = _Out(args.out)
    out.write("stats.csv", _csv_text(["test", "statistic", "df", "p", "effect", "effect_name"], rows))
    if args.posthoc != "none":
        ph = posthoc_bonferroni(data, args.posthoc, args.alpha)
        out.write("posthoc.csv", _csv_text(
            ["a", "b", "statistic", "p_raw", "p_bonferroni", "significant", "flags"],
            [[p.a, p.b, repr(p.statistic), repr(p.p_raw), repr(p.p_corrected), str(p.significant).lower(),
              ";".join(p.flags)] for p in ph],
        ))
        lines.append(f"post-hoc ({args.posthoc}, Bonferroni x{len(ph)}, alpha {args.alpha}):")
        for p in ph:
            if p.flags:
                lines.append(f"  {p.a} vs {p.b}: {', '.join(p.flags)}")
            else:
                mark = " *" if p.significant else ""
                lines.append(f"  {p.a} vs {p.b}: p_corr = {p.p_corrected:.4g}{mark}")
    summary = "\n".join(lines) + "\n"
    out.write("summary.txt", summary)
    sys.stdout.write(summary)
    return 0


def _physio_table(text: str, source: str):
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[:2] != ["measure", "baseline"] or len(header) < 3:
        raise ValueError(f"{source}: physiological CSV needs columns measure,baseline,<level>...")
    levels = header[2:]
    rows = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ValueError(f"{source}: wrong column count at line {lineno}")
        try:
            base, vals = float(row[1]), [float(v) for v in row[2:]]
        except ValueError:
            raise ValueError(f"{source}: bad number at line {lineno}") from None
        for lv, v in zip(levels, vals):
            try:
                pc, flag = percent_change(base, v), ""
            except ValueError as exc:
                pc, flag = None, str(exc)
            rows.append({"measure": row[0], "level": lv, "baseline": base, "value": v,
                         "percent_change": pc, "flags": flag})
    return rows


def cmd_report(args) -> int:
    specs = {s.id: s for s in _levels(args)}
    boundary = _boundary(args)
    seed = _resolve_seed(args.seed)
    raw_log = _read_bytes(args.pose_log)
    raw_seg = _read_bytes(args.segments)
    inputs = {"pose_log": raw_log, "segments": raw_seg}
    if args.boundary:
        inputs["boundary"] = _read_bytes(args.boundary)
    if args.levels_config:
        inputs["levels_config"] = _read_bytes(args.levels_config)
    if args.ref:
        inputs["reference"] = _read_bytes(args.ref)
    if args.physio:
        inputs["physio"] = _read_bytes(args.physio)

    try:
        header, samples = parse_pose_log_with_header(raw_log)
    except ValueError as exc:
        raise ValueError(f"{args.pose_log}: {exc}") from None
    seg = parse_segmentation(raw_seg.decode("utf-8"), max(s.duration for s in specs.values()))
    rate = float(header.get("rate_hz", NOMINAL_RATE_HZ))
    joints = _joints(args.joints)

    params = {
        "seed": seed, "capture_radius": args.capture_radius, "joints": joints, "mode": args.mode,
        "assoc_tol": args.assoc_tol, "max_gap": args.max_gap, "boundary": boundary.to_dict(),
        "levels": {k: [s.bpm, s.movement_type, list(s.hold_range), s.duration] for k, s in specs.items()},
    }
    h = hashlib.sha256()
    h.update(json.dumps(params, sort_keys=True).encode())
    for name in sorted(inputs):
        h.update(name.encode() + b"\0" + hashlib.sha256(inputs[name]).digest())
    config_hash = h.hexdigest()

    out = _Out(args.out)
    completion = []
    total_n = total_hit = 0
    for s in seg:
        if s.label not in specs:
            continue
        script = build_level_schedule(specs[s.label], boundary, seed)
        events = replay(script, samples, args.capture_radius, t_offset=s.start_t)
        out.write(f"events_{s.label}.jsonl", format_events(events))
        c = summarize(events, script)
        total_n += c.targets_total
        total_hit += c.targets_hit
        completion.append({"level": c.level, "targets_total": c.targets_total, "targets_hit": c.targets_hit,
                           "completion_fraction": c.completion_fraction})
    metrics = level_metrics(samples, seg, joints, rate, args.max_gap)

    ape = None
    if args.ref:
        try:
            _, ref = parse_pose_log_with_header(inputs["reference"])
        except ValueError as exc:
            raise ValueError(f"{args.ref}: {exc}") from None
        windows = [(s.label, (s.start_t, s.end_t)) for s in seg]
        ape = _ape_rows(samples, ref, joints, windows, args.mode, args.assoc_tol, rate)
    physio = _physio_table(inputs["physio"].decode("utf-8"), args.physio) if args.physio else None

    report = {
        "metadata": {"session_id": config_hash[:16], "config_hash": config_hash, "version": __version__,
                     "parameters": params},
        "completion": {"levels": completion, "targets_total": total_n, "targets_hit": total_hit,
                       "completion_fraction": total_hit / total_n if total_n else 0.0},
        "metrics": [m.as_record() for m in metrics],
        "ape": None if ape is None else [
            {"joint": r.joint, "task": r.task, "flags": ";".join(r.flags),
             **({} if r.stats is None else {"n": r.stats.n, "mean_m": r.stats.mean, "sd_m": r.stats.sd,
                                             "rmse_m": r.stats.rmse, "max_m": r.stats.max})}
            for r in ape
        ],
        "physio": physio,
    }
    out.write("report.json", json.dumps(report, indent=2, sort_keys=True, allow_nan=False) + "\n")
    out.write("completion.csv", _csv_text(
        ["level", "targets_total", "targets_hit", "completion_fraction"],
        [[c["level"], c["targets_total"], c["targets_hit"], repr(c["completion_fraction"])] for c in completion],
    ))
    out.write("metrics.csv", format_metrics_csv(metrics))
    # long-form series, one row per plotted point (level on the x axis)
    series = [[m.joint, metric, m.level, _num(v)]
              for metric, attr in (("mean_speed_mps", "mean_speed"), ("rom_m", "rom"), ("volume_m3", "volume"))
              for m in metrics for v in [getattr(m, attr)] if v is not None]
    out.write("plot_metrics_by_level.csv", _csv_text(["joint", "metric", "level", "value"], series))
    if ape is not None:
        out.write("ape.csv", format_ape_csv(ape))
    if physio is not None:
        out.write("plot_physio_change.csv", _csv_text(
            ["measure", "level", "baseline", "value", "percent_change", "flags"],
            [[r["measure"], r["level"], repr(r["baseline"]), repr(r["value"]), _num(r["percent_change"]), r["flags"]]
             for r in physio],
        ))
    return 0


# -- parser -------------------------------------------------------------------

def _add_level_flags(p, repeat_level=True):
    if repeat_level:
        p.add_argument("--level", action="append", metavar="ID",
                       help="level id to include, repeatable (default: every configured level)")
    p.add_argument("--levels-config", metavar="FILE",
                   help="INI overriding level specs; keys bpm (beats/min), movement_type, "
                        "hold_min_s (s), hold_max_s (s), duration_s (s)")
    p.add_argument("--boundary", metavar="FILE",
                   help="movement boundary JSON with rest_y, overhead_y, lateral_left_x, "
                        "lateral_right_x, forward_z (m); default: a seated-adult box")
    p.add_argument("--seed", type=int, metavar="INT",
                   help=f"schedule seed (integer, no unit); falls back to ${SEED_ENV}, then 0")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mobility-kit", description="Exergame session engine and movement analytics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    p = sub.add_parser("simulate", help="build target scripts and replay a pose stream through the game")
    _add_level_flags(p)
    p.add_argument("--pose-log", metavar="FILE",
                   help="recorded pose log (positions in m, t in s); default: synthesize one per level")
    p.add_argument("--segments", metavar="FILE",
                   help="segmentation CSV label,start_t,end_t (s) locating each level in --pose-log")
    p.add_argument("--profiles", metavar="FILE",
                   help="patient profile INI used when synthesizing (default: perfect play)")
    p.add_argument("--profile", metavar="NAME", help="section of --profiles to use (default: the first)")
    p.add_argument("--capture-radius", type=float, default=CAPTURE_RADIUS, metavar="M",
                   help=f"hit sphere radius (m, default {CAPTURE_RADIUS})")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="synthesize a patient population and its metric table")
    _add_level_flags(p)
    p.add_argument("--profiles", metavar="FILE",
                   help="profile INI; keys amplitude_scale (0-1), speed_scale (0-1], tremor_sd (m), "
                        "reaction_delay (s), seed, shoulder_left/right (m, 'x, y, z')")
    p.add_argument("--healthy", type=int, default=13, metavar="N",
                   help="number of default healthy profiles when --profiles is absent (count, default 13)")
    p.add_argument("--population-seed", type=int, default=0, metavar="INT",
                   help="seed drawing the healthy profile parameters (integer, default 0)")
    p.add_argument("--joints", metavar="LIST", help="comma-separated joint ids (default LH,RH,LE,RE,LS,RS)")
    p.add_argument("--metrics-only", action="store_true", help="skip writing the pose logs")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("analyze", help="speed, ROM and workspace volume per level and joint")
    p.add_argument("--pose-log", required=True, metavar="FILE", help="pose log (positions in m, t in s)")
    p.add_argument("--segments", metavar="FILE",
                   help="segmentation CSV label,start_t,end_t (s); default: the whole log as one window")
    p.add_argument("--joints", metavar="LIST", help="comma-separated joint ids (default LH,RH,LE,RE,LS,RS)")
    p.add_argument("--max-gap", type=float, default=DEFAULT_MAX_GAP_S, metavar="S",
                   help=f"longest dropout to interpolate (s, default {DEFAULT_MAX_GAP_S}); longer ones split")
    p.add_argument("--no-gap-fill", action="store_true", help="use recorded samples only")
    p.add_argument("--rate", type=float, metavar="HZ",
                   help="nominal sample rate (Hz; default: the log header, else 50)")
    p.add_argument("--level-duration", type=float, default=120.0, metavar="S",
                   help="configured level length for segment validation (s, default 120)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: current)")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("eval-tracking", help="absolute pose error against a reference capture")
    p.add_argument("--est", required=True, metavar="FILE", help="estimated pose log (m, s)")
    p.add_argument("--ref", required=True, metavar="FILE", help="reference pose log (m, s), source=reference")
    p.add_argument("--mode", choices=REGISTRATION_MODES, default="none",
                   help="alignment before error computation (default none)")
    p.add_argument("--assoc-tol", type=float, default=DEFAULT_ASSOC_TOL, metavar="S",
                   help=f"max timestamp difference for a match (s, default {DEFAULT_ASSOC_TOL})")
    p.add_argument("--group-by", choices=("none", "task"), default="none",
                   help="split errors per task window from --segments (default none)")
    p.add_argument("--segments", metavar="FILE", help="task windows as label,start_t,end_t CSV (s)")
    p.add_argument("--level-duration", type=float, default=120.0, metavar="S",
                   help="configured level length for segment validation (s, default 120)")
    p.add_argument("--joints", metavar="LIST", help="comma-separated joint ids (default LH,RH,LE,RE,LS,RS)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: current)")
    p.set_defaults(func=cmd_eval_tracking)

    p = sub.add_parser("stats", help="within-subject tests on long-format data")
    p.add_argument("--input", required=True, metavar="FILE",
                   help="CSV with subject,condition,value (value in the measure's own unit)")
    p.add_argument("--where", action="append", default=[], metavar="COL=VAL",
                   help="keep rows whose column equals the value, repeatable (e.g. joint=LH)")
    p.add_argument("--conditions", metavar="LIST", help="comma-separated condition order (default: first seen)")
    p.add_argument("--test", choices=("rm_anova", "friedman", "both"), default="both",
                   help="omnibus test(s) to run (default both)")
    p.add_argument("--tie-correction", action="store_true", help="apply the Friedman tie correction")
    p.add_argument("--posthoc", choices=("none", *POSTHOC_FAMILIES), default="none",
                   help="pairwise tests with Bonferroni correction (default none)")
    p.add_argument("--alpha", type=float, default=0.05, metavar="P",
                   help="family-wise significance level (probability, default 0.05)")
    p.add_argument("--out", default=".", metavar="DIR", help="output directory (default: current)")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("report", help="consolidated session report with plot-ready series")
    _add_level_flags(p, repeat_level=False)
    p.add_argument("--pose-log", required=True, metavar="FILE", help="session pose log (m, s)")
    p.add_argument("--segments", required=True, metavar="FILE", help="segmentation CSV label,start_t,end_t (s)")
    p.add_argument("--ref", metavar="FILE", help="optional reference pose log for APE (m, s)")
    p.add_argument("--mode", choices=REGISTRATION_MODES, default="none", help="APE alignment (default none)")
    p.add_argument("--assoc-tol", type=float, default=DEFAULT_ASSOC_TOL, metavar="S",
                   help=f"APE timestamp tolerance (s, default {DEFAULT_ASSOC_TOL})")
    p.add_argument("--physio", metavar="FILE",
                   help="optional CSV measure,baseline,L1,...; values in the measure's unit (bpm, %%, mmHg)")
    p.add_argument("--capture-radius", type=float, default=CAPTURE_RADIUS, metavar="M",
                   help=f"hit sphere radius (m, default {CAPTURE_RADIUS})")
    p.add_argument("--max-gap", type=float, default=DEFAULT_MAX_GAP_S, metavar="S",
                   help=f"longest dropout to interpolate (s, default {DEFAULT_MAX_GAP_S})")
    p.add_argument("--joints", metavar="LIST", help="comma-separated joint ids (default LH,RH,LE,RE,LS,RS)")
    p.add_argument("--out", required=True, metavar="DIR", help="output directory")
    p.set_defaults(func=cmd_report)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        print("mobility-kit: error: a subcommand is required", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except InputError as exc:
        print(f"mobility-kit {args.command}: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"mobility-kit {args.command}: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
