"""Command line front end.

Subcommands cover the full path from raw AIS to scored forecasts:

    clean           raw CSV/NDJSON reports -> cleaned trajectory NDJSON
    tokenize        trajectories -> token corpus (text or binary)
    train           corpus -> n-gram model file
    predict         trajectories + model -> forecast NDJSON (ensembles)
    kalman          trajectories -> constant-velocity baseline forecasts
    eval            trajectories + model -> relative-deviation report CSV
    synth           labelled synthetic fleets for pipeline validation
    export-geojson  forecast or trajectory NDJSON -> GeoJSON LineStrings

Exit codes: 0 on success, 1 on a domain error (one line on stderr),
2 on a usage error. All file outputs are written to a temp file in the
destination directory and moved into place, and contain no wall-clock
timestamps, so a rerun with the same inputs and seed is byte-identical.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys
import tempfile

import numpy as np

from . import ais_pipeline, metrics, synth, tokenizer
from .ais_pipeline import CleaningConfig
from .geo_core import GeoPoint
from .h3_codec import geo_to_cell, to_pseudo_octal
from .kalman import KalmanConfig, kf_fit, kf_forecast
from .predictor import (
    NGramModel,
    NoViablePredictionError,
    decode_to_curve,
    ensemble_predict,
    generate,
    train_ngram,
)
from .tokenizer import BOS_ID, EOS_ID, FRAME_LEN, PAD_ID

_DOMAIN_ERRORS = (ValueError, RuntimeError, OSError)


@contextlib.contextmanager
def _atomic(path: str):
    """Yield a temp path that replaces `path` only on success."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".hextraj-")
    os.close(fd)
    try:
        yield tmp
        os.replace(tmp, path)
    finally:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)


def _write_ndjson(path: str, rows) -> None:
    with _atomic(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, separators=(",", ":")) + "\n")


def _read_ndjson(path: str) -> list[dict]:
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# config files: one `key = value` per line, '#' comments, flags win.

def _coerce(text: str):
    t = text.strip()
    if t.lower() in ("true", "false"):
        return t.lower() == "true"
    for cast in (int, float):
        try:
            return cast(t)
        except ValueError:
            pass
    return t


def _apply_config(args: argparse.Namespace, argv: list[str]) -> None:
    explicit = set()
    for tok in argv:
        if tok.startswith("--"):
            explicit.add(tok[2:].split("=", 1)[0])
    with open(args.config, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{args.config}:{lineno}: expected key = value")
            key, _, value = line.partition("=")
            key = key.strip()
            dest = key.replace("-", "_")
            # keys for other subcommands are allowed, so skip silently
            if key in explicit or not hasattr(args, dest):
                continue
            setattr(args, dest, _coerce(value))


# ---------------------------------------------------------------------------
# shared helpers

def _traj_to_ids(points: np.ndarray) -> np.ndarray:
    cells = [to_pseudo_octal(geo_to_cell(GeoPoint(lat, lon))) for lat, lon in points]
    return tokenizer.encode_trajectory(cells).ids


def _strip_specials(ids: np.ndarray) -> np.ndarray:
    ids = np.asarray(ids)
    ids = ids[ids != PAD_ID]
    if len(ids) and ids[0] == BOS_ID:
        ids = ids[1:]
    if len(ids) and ids[-1] == EOS_ID:
        ids = ids[:-1]
    return ids


def _int_list(value) -> list[int]:
    return [int(v) for v in str(value).split(",")]


def _kalman_forecast_curve(context_pts: np.ndarray, n_steps: int) -> np.ndarray:
    cfg = KalmanConfig()
    state = kf_fit(np.asarray(context_pts, dtype=np.float64), cfg)
    return kf_forecast(state, n_steps, cfg)


# ---------------------------------------------------------------------------
# subcommands

def cmd_clean(args) -> int:
    result = ais_pipeline.ingest(args.inp, fmt=args.format)
    cfg = CleaningConfig(eps_global=args.eps_global, eps_local=args.eps_local)
    trajs = ais_pipeline.clean(result.records, cfg)
    with _atomic(args.out) as tmp:
        ais_pipeline.write_trajectories(tmp, trajs)
    print(
        f"clean: {len(result.records)} records in, {result.skipped} skipped, "
        f"{len(trajs)} trajectories out",
        file=sys.stderr,
    )
    return 0


def cmd_tokenize(args) -> int:
    trajs = ais_pipeline.read_trajectories(args.inp)
    seqs = []
    for traj in trajs:
        ts = tokenizer.encode_trajectory(
            [to_pseudo_octal(geo_to_cell(GeoPoint(lat, lon))) for lat, lon in traj.points]
        )
        if args.chunk:
            seqs.extend(c.ids for c in tokenizer.chunk(ts))
        else:
            seqs.append(ts.ids)
    writer = tokenizer.write_corpus_binary if args.format == "binary" else tokenizer.write_corpus_text
    with _atomic(args.out) as tmp:
        writer(tmp, seqs)
    print(f"tokenize: {len(trajs)} trajectories -> {len(seqs)} sequences", file=sys.stderr)
    return 0


def cmd_train(args) -> int:
    seqs = [_strip_specials(s) for s in tokenizer.read_corpus(args.inp)]
    model = train_ngram(seqs, k=args.k, alpha=args.alpha)
    with _atomic(args.out) as tmp:
        model.save(tmp)
    total = sum(len(s) for s in seqs)
    print(f"train: {len(seqs)} sequences, {total} tokens, order {args.k} frames", file=sys.stderr)
    return 0


def _forecast_entries(args, use_kalman: bool):
    trajs = ais_pipeline.read_trajectories(args.inp)
    model = None if use_kalman else NGramModel.load(args.model)
    n_frames = args.pred_tokens // FRAME_LEN
    ctx = args.context_min
    for traj in trajs:
        if len(traj) < ctx + 1:
            yield {"id": traj.id, "error": "trajectory shorter than requested context"}
            continue
        context_pts = traj.points[:ctx]
        truth = traj.points[ctx : ctx + n_frames]
        entry = {
            "id": traj.id,
            "context": context_pts.tolist(),
            "truth": truth.tolist(),
        }
        if use_kalman:
            entry["prediction"] = _kalman_forecast_curve(context_pts, n_frames).tolist()
        else:
            try:
                bundle = ensemble_predict(
                    model,
                    _traj_to_ids(context_pts),
                    n_frames,
                    n=args.n,
                    temperature=args.temperature,
                    seed=args.seed,
                )
            except NoViablePredictionError as exc:
                yield {"id": traj.id, "error": str(exc)}
                continue
            entry["prediction"] = bundle.representative_curve.tolist()
            entry["agreement"] = float(bundle.agreement)
            entry["rejected"] = bundle.rejected
        yield entry


def cmd_predict(args) -> int:
    _write_ndjson(args.out, _forecast_entries(args, use_kalman=False))
    return 0


def cmd_kalman(args) -> int:
    _write_ndjson(args.out, _forecast_entries(args, use_kalman=True))
    return 0


def cmd_eval(args) -> int:
    trajs = ais_pipeline.read_trajectories(args.inp)
    model = None
    if not args.kalman:
        model = NGramModel.load(args.model)
    grid = [(cm, pt) for cm in _int_list(args.context_min) for pt in _int_list(args.pred_tokens)]

    report_rows = []
    sample_rows = []
    for cm, pt in grid:
        n_frames = pt // FRAME_LEN
        rel = []
        spans = []
        per_item = []
        for traj in trajs:
            if len(traj) < cm + 2:
                continue
            context_pts = traj.points[:cm]
            truth = traj.points[cm : cm + n_frames]
            if args.kalman:
                pred = _kalman_forecast_curve(context_pts, n_frames)
            else:
                ids = _traj_to_ids(context_pts)
                if args.n > 1:
                    try:
                        bundle = ensemble_predict(
                            model, ids, n_frames,
                            n=args.n, temperature=args.temperature, seed=args.seed,
                        )
                    except NoViablePredictionError:
                        continue
                    pred = bundle.representative_curve
                else:
                    try:
                        pred = decode_to_curve(
                            generate(model, ids, n_frames, temperature=args.temperature, seed=args.seed)
                        )
                    except ValueError:
                        continue
            m = min(len(pred), len(truth))
            if m < 1:
                continue
            fr = metrics.discrete_frechet(pred[:m], truth[:m])
            try:
                reach = metrics.prediction_distance(context_pts, pred[:m])
                dev = metrics.relative_deviation(fr, reach)
            except metrics.DegeneratePredictionError:
                continue
            rel.append(dev)
            spans.append(m)
            per_item.append((traj.id, fr, dev, m))
        if not rel:
            continue
        keep = metrics.completed_filter(np.array(spans, dtype=np.float64))
        summary = metrics.summarize(np.array(rel)[keep])
        report_rows.append(
            f"{cm},{pt},{summary.mean:.6f},{summary.median:.6f},{summary.density_peak:.6f},{summary.count}"
        )
        kept = set(keep.tolist())
        for j, (tid, fr, dev, m) in enumerate(per_item):
            sample_rows.append(f"{cm},{pt},{tid},{fr:.3f},{dev:.6f},{m},{int(j in kept)}")

    with _atomic(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            fh.write("context_min,pred_tokens,mean_pct,median_pct,peak_pct,count\n")
            fh.writelines(r + "\n" for r in report_rows)
    if args.samples_out:
        with _atomic(args.samples_out) as tmp:
            with open(tmp, "w", encoding="utf-8") as fh:
                fh.write("context_min,pred_tokens,traj_id,frechet_m,rel_pct,predicted_min,retained\n")
                fh.writelines(r + "\n" for r in sample_rows)
    print(f"eval: {len(trajs)} trajectories, {len(report_rows)} grid cells", file=sys.stderr)
    return 0


def cmd_synth(args) -> int:
    if args.scenario == "corridor":
        records, manifest = synth.corridor_fleet(n_vessels=args.n, seed=args.seed)
    else:
        records, manifest = synth.defect_fleet(n_vessels=args.n, seed=args.seed)
    with _atomic(args.out) as tmp:
        synth.write_records_csv(tmp, records)
    manifest_path = args.out + ".manifest.json"
    with _atomic(manifest_path) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=1)
            fh.write("\n")
    print(f"synth: {len(records)} records, manifest {manifest_path}", file=sys.stderr)
    return 0


def _feature(role: str, ident, coords) -> dict:
    return {
        "type": "Feature",
        "properties": {"role": role, "id": ident},
        "geometry": {
            "type": "LineString",
            "coordinates": [[lon, lat] for lat, lon in coords],
        },
    }


def cmd_export_geojson(args) -> int:
    features = []
    for obj in _read_ndjson(args.inp):
        ident = obj.get("id")
        if "points" in obj:
            features.append(_feature("context", ident, obj["points"]))
            continue
        for role in ("context", "prediction", "truth"):
            if obj.get(role):
                features.append(_feature(role, ident, obj[role]))
    doc = {"type": "FeatureCollection", "features": features}
    with _atomic(args.out) as tmp:
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, separators=(",", ":"))
            fh.write("\n")
    print(f"export-geojson: {len(features)} features", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hextraj",
        description="AIS trajectory cleaning, tokenization, and forecasting.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out=True):
        p.add_argument("--in", dest="inp", required=True, help="input path")
        if out:
            p.add_argument("--out", required=True, help="output path")
        p.add_argument("--config", help="key = value file; explicit flags win")

    p = sub.add_parser("clean", help="raw AIS reports to trajectory NDJSON")
    common(p)
    p.add_argument("--format", choices=("csv", "ndjson"), default="csv")
    p.add_argument("--eps-global", type=float, default=10.0)
    p.add_argument("--eps-local", type=float, default=0.1)
    p.set_defaults(func=cmd_clean)

    p = sub.add_parser("tokenize", help="trajectories to token corpus")
    common(p)
    p.add_argument("--format", choices=("text", "binary"), default="binary")
    p.add_argument("--chunk", action="store_true", help="split into training windows")
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("train", help="fit the n-gram model")
    common(p)
    p.add_argument("--k", type=int, default=8, help="context order in frames of history")
    p.add_argument("--alpha", type=float, default=0.1)
    p.set_defaults(func=cmd_train)

    for name, fn in (("predict", cmd_predict), ("kalman", cmd_kalman)):
        p = sub.add_parser(name, help=f"{name} forecasts as NDJSON")
        common(p)
        if name == "predict":
            p.add_argument("--model", required=True)
            p.add_argument("--n", type=int, default=30, help="ensemble size")
            p.add_argument("--temperature", type=float, default=1.0)
            p.add_argument("--seed", type=int, default=0)
        p.add_argument("--context-min", type=int, default=30)
        p.add_argument("--pred-tokens", type=int, default=2560)
        p.set_defaults(func=fn)

    p = sub.add_parser("eval", help="relative-deviation report over a grid")
    common(p)
    p.add_argument("--model", help="n-gram model path (omit with --kalman)")
    p.add_argument("--kalman", action="store_true", help="score the baseline instead")
    p.add_argument("--context-min", default="30,60,100")
    p.add_argument("--pred-tokens", default="2560,5120,7680")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--temperature", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples-out", help="per-trajectory CSV dump")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="labelled synthetic AIS fleets")
    p.add_argument("--scenario", choices=("corridor", "defects"), required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="key = value file; explicit flags win")
    p.add_argument("--n", type=int, default=200, help="number of vessels")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("export-geojson", help="NDJSON to GeoJSON LineStrings")
    common(p)
    p.set_defaults(func=cmd_export_geojson)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "config", None):
            _apply_config(args, argv)
        if args.command == "eval" and not args.kalman and not args.model:
            parser.error("eval needs --model unless --kalman is given")
        return args.func(args)
    except _DOMAIN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
