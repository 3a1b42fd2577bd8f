#!/usr/bin/env python3
"""Build the PBC analysis fixture from the public PBC trial data.

Source: the `pbc` table shipped with the R `survival` package (the Mayo Clinic
primary biliary cholangitis trial, 1974-1984; 418 rows). By default the
package source tarball is downloaded from CRAN; pass --tarball to use an
already-downloaded copy, or --mirror to fetch from another CRAN mirror.

Outputs (under --out-dir):
  pbc_raw.csv  - the full 418-row table, all 20 columns, NA for missing.
  pbc134.csv   - the analysis fixture: randomized patients (trt 1 or 2),
                 hepato == 0, and complete cases across all 20 columns
                 (134 rows: 72 D-penicillamine, 62 placebo). Adds a `years`
                 column (days / 365.25) and string labels for group/status.

The fixture rule matters: filtering only on randomization and hepato == 0
gives 152 rows; the complete-case requirement (listwise deletion over every
column, including columns the analysis does not use) is what yields the
134-patient cohort with 52/72 and 46/62 censored.
"""

import argparse
import csv
import gzip
import io
import math
import struct
import tarfile
import urllib.request
from pathlib import Path

CRAN = "https://cran.r-project.org"
PACKAGE_PATHS = [
    "/src/contrib/survival_3.8-3.tar.gz",
    "/src/contrib/Archive/survival/survival_3.5-8.tar.gz",
]

COLUMNS = ["id", "time", "status", "trt", "age", "sex", "ascites", "hepato",
           "spiders", "edema", "bili", "chol", "albumin", "copper", "alk.phos",
           "ast", "trig", "platelet", "protime", "stage"]


class RdaReader:
    """Minimal reader for .rda (XDR serialization v2/v3): enough for plain
    data.frames of atomic columns."""

    def __init__(self, data: bytes):
        self.d = data
        self.p = 0
        self.refs = []

    def u4(self):
        v = struct.unpack_from(">i", self.d, self.p)[0]
        self.p += 4
        return v

    def raw(self, n):
        v = self.d[self.p:self.p + n]
        self.p += n
        return v

    def item(self):
        flags = self.u4()
        ptype = flags & 255
        has_attr = bool(flags & (1 << 9))
        has_tag = bool(flags & (1 << 10))
        if ptype == 254:
            return None
        if ptype == 255:  # reference
            idx = flags >> 8
            if idx == 0:
                idx = self.u4()
            return self.refs[idx - 1]
        if ptype == 1:  # symbol
            name = self.item()
            self.refs.append(name)
            return name
        if ptype == 2:  # pairlist
            if has_attr:
                self.item()
            tag = self.item() if has_tag else None
            car = self.item()
            cdr = self.item()
            out = [(tag, car)]
            if isinstance(cdr, list):
                out.extend(cdr)
            elif cdr is not None:
                out.append((None, cdr))
            return out
        if ptype == 9:  # char
            n = self.u4()
            return None if n == -1 else self.raw(n).decode("utf-8", "replace")
        if ptype in (10, 13):  # logical / integer
            n = self.u4()
            vals = [self.u4() for _ in range(n)]
            vals = [None if v == -2147483648 else v for v in vals]
            return self.with_attrs(vals, has_attr)
        if ptype == 14:  # real
            n = self.u4()
            vals = []
            for _ in range(n):
                b = self.raw(8)
                v = struct.unpack(">d", b)[0]
                if math.isnan(v) and struct.unpack(">I", b[4:])[0] == 1954:
                    v = None  # R's NA_real_
                vals.append(v)
            return self.with_attrs(vals, has_attr)
        if ptype in (16, 19):  # character vector / list
            n = self.u4()
            vals = [self.item() for _ in range(n)]
            return self.with_attrs(vals, has_attr)
        raise ValueError(f"unhandled SEXP type {ptype}")

    def with_attrs(self, vals, has_attr):
        attrs = {}
        if has_attr:
            for tag, car in self.item() or []:
                attrs[tag] = car
        return {"values": vals, "attrs": attrs}


def load_rda(blob: bytes):
    d = gzip.decompress(blob)
    assert d[:4] in (b"RDX2", b"RDX3"), d[:4]
    r = RdaReader(d[5:])
    assert r.raw(2) == b"X\n"
    ver = r.u4()
    r.u4()
    r.u4()
    if ver >= 3:
        r.raw(r.u4())  # native encoding
    return {tag: car for tag, car in r.item()}


def data_frame(obj):
    names = obj["attrs"]["names"]["values"]
    table = {}
    for name, col in zip(names, obj["values"]):
        vals = col["values"]
        attrs = col.get("attrs", {})
        if "levels" in attrs:
            levels = attrs["levels"]["values"]
            vals = [None if v is None else levels[v - 1] for v in vals]
        table[name] = vals
    return table


def fmt(v):
    if v is None:
        return "NA"
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return str(v)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--mirror", default=CRAN, help="CRAN mirror base URL")
    ap.add_argument("--tarball", help="local survival package source tarball")
    ap.add_argument("--out-dir", default=str(Path(__file__).resolve().parent.parent /
                                             "tests" / "data"))
    args = ap.parse_args()

    if args.tarball:
        blob = Path(args.tarball).read_bytes()
    else:
        blob = None
        for path in PACKAGE_PATHS:
            try:
                with urllib.request.urlopen(args.mirror + path, timeout=120) as resp:
                    blob = resp.read()
                break
            except Exception as e:
                print(f"fetch failed for {path}: {e}")
        if blob is None:
            raise SystemExit("could not download the survival package source")

    with tarfile.open(fileobj=io.BytesIO(blob), mode="r:gz") as tar:
        rda = tar.extractfile("survival/data/pbc.rda").read()
    pbc = data_frame(load_rda(rda)["pbc"])
    nrow = len(pbc["id"])
    assert nrow == 418, nrow

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(out_dir / "pbc_raw.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(COLUMNS)
        for i in range(nrow):
            w.writerow([fmt(pbc[c][i]) for c in COLUMNS])

    rows = [{c: pbc[c][i] for c in COLUMNS} for i in range(nrow)]
    cohort = [r for r in rows
              if r["trt"] in (1, 2) and r["hepato"] == 0
              and all(r[c] is not None for c in COLUMNS)]
    assert len(cohort) == 134, len(cohort)
    n_dpen = sum(1 for r in cohort if r["trt"] == 1)
    assert n_dpen == 72 and len(cohort) - n_dpen == 62, n_dpen

    with open(out_dir / "pbc134.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["id", "days", "years", "group", "status", "age", "edema",
                    "bili", "albumin", "protime"])
        for r in cohort:
            w.writerow([
                fmt(r["id"]),
                fmt(r["time"]),
                repr(r["time"] / 365.25),
                "dpenicillamine" if r["trt"] == 1 else "placebo",
                "dead" if r["status"] == 2 else "censored",
                repr(float(r["age"])),
                fmt(r["edema"]),
                fmt(r["bili"]),
                fmt(r["albumin"]),
                fmt(r["protime"]),
            ])
    print(f"wrote {out_dir/'pbc_raw.csv'} ({nrow} rows) and "
          f"{out_dir/'pbc134.csv'} ({len(cohort)} rows)")


if __name__ == "__main__":
    main()
