#!/usr/bin/env python3
"""Convert the UCI Multiple Features (handwritten digits) benchmark into a
paired multi-view manifest readable by `umc`.

The six mfeat-*.csv tables are taken from the mvlearn wheel, which ships
them with a header row and the class label in the last column. Pass
--source to point at an already extracted directory instead.
"""
import argparse
import csv
import json
import pathlib
import subprocess
import sys
import tempfile
import zipfile

VIEWS = ["fou", "fac", "kar", "pix", "zer", "mor"]


def fetch_from_wheel(workdir: pathlib.Path) -> pathlib.Path:
    subprocess.run(
        [sys.executable, "-m", "pip", "download", "mvlearn==0.5.0", "--no-deps", "-d", str(workdir)],
        check=True,
    )
    wheel = next(workdir.glob("mvlearn-*.whl"))
    out = workdir / "unpacked"
    with zipfile.ZipFile(wheel) as zf:
        for name in zf.namelist():
            if "UCImultifeature/mfeat-" in name:
                zf.extract(name, out)
    return out / "mvlearn" / "datasets" / "UCImultifeature"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default="data/digit")
    ap.add_argument("--source", help="directory holding mfeat-*.csv")
    args = ap.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        src = pathlib.Path(args.source) if args.source else fetch_from_wheel(pathlib.Path(tmp))
        labels = None
        views = []
        for vid, name in enumerate(VIEWS):
            with open(src / f"mfeat-{name}.csv", newline="") as fh:
                rows = list(csv.reader(fh))[1:]
            dim = len(rows[0]) - 1
            view_labels = [int(float(r[-1])) for r in rows]
            if labels is None:
                labels = view_labels
            elif labels != view_labels:
                raise SystemExit(f"label column of mfeat-{name} disagrees with mfeat-{VIEWS[0]}")
            path = f"view{vid}_{name}.csv"
            with open(out / path, "w", newline="\n") as fh:
                for gid, r in enumerate(rows):
                    fh.write(",".join([str(gid)] + r[:-1]) + "\n")
            views.append({"id": vid, "features": path, "dim": dim})

    with open(out / "labels.csv", "w", newline="\n") as fh:
        for gid, y in enumerate(labels):
            fh.write(f"{gid},{y}\n")
    manifest = {"name": "digit", "K": 10, "paired": True, "labels": "labels.csv", "views": views}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"wrote {len(labels)} samples x {len(views)} views to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
