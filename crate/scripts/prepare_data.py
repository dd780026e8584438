#!/usr/bin/env python3
"""Fetch the benchmark datasets and write the CSVs the manifests in datasets/ expect.

Usage:
    python scripts/prepare_data.py                    # every dataset into datasets/
    python scripts/prepare_data.py breast_cancer wine --out /data/advlabel

Breast cancer ships with scikit-learn and needs no network. The rest come
from OpenML or the UCI repository. Column names are normalized to
lower_snake_case, which is how the manifests refer to them.
"""

import argparse
import io
import re
import sys
import urllib.request
import zipfile
from pathlib import Path

import pandas as pd

UCI = "https://archive.ics.uci.edu/static/public"


def snake(name):
    name = re.sub(r"[^0-9a-zA-Z]+", "_", str(name)).strip("_")
    return name.lower()


def normalized(df):
    df = df.copy()
    df.columns = [snake(c) for c in df.columns]
    return df


def ordinal_encode(df, skip):
    for col in df.columns:
        if col not in skip and not pd.api.types.is_numeric_dtype(df[col]):
            df[col] = df[col].astype("category").cat.codes
    return df


def openml(name, version=1):
    from sklearn.datasets import fetch_openml

    bunch = fetch_openml(name, version=version, as_frame=True, parser="auto")
    return bunch.frame


def download(url):
    with urllib.request.urlopen(url, timeout=120) as r:
        return r.read()


def breast_cancer():
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer(as_frame=True)
    df = normalized(bunch.data)
    # sklearn codes malignant as 0
    df["diagnosis"] = bunch.target.map({0: "M", 1: "B"})
    return df


def obs_network():
    from scipy.io import arff

    raw = download(f"{UCI}/404/burst+header+packet+bhp+flooding+attack+on+optical+burst+switching+obs+network.zip")
    with zipfile.ZipFile(io.BytesIO(raw)) as z:
        member = next(n for n in z.namelist() if n.endswith(".arff"))
        data, _ = arff.loadarff(io.StringIO(z.read(member).decode("utf-8", "replace")))
    df = normalized(pd.DataFrame(data))
    for col in df.columns:
        if df[col].dtype == object:
            df[col] = df[col].str.decode("utf-8")
    return ordinal_encode(df, skip={"class"})


def cardiotocography():
    raw = download(f"{UCI}/193/cardiotocography.zip")
    with zipfile.ZipFile(io.BytesIO(raw)) as z:
        member = next(n for n in z.namelist() if n.endswith(".xls"))
        sheet = pd.read_excel(io.BytesIO(z.read(member)), sheet_name="Data", header=1)
    df = normalized(sheet)
    keep = ["lb", "ac", "fm", "uc", "dl", "ds", "dp", "astv", "mstv", "altv", "mltv",
            "width", "min", "max", "nmax", "nzeros", "mode", "mean", "median", "variance", "tendency", "class"]
    df = df[[c for c in keep if c in df.columns]].dropna()
    df["class"] = df["class"].astype(int)
    return df


def clave():
    raw = download(f"{UCI}/324/firm+teacher+clave+direction+classification.zip")
    with zipfile.ZipFile(io.BytesIO(raw)) as z:
        member = next(n for n in z.namelist() if n.endswith(".csv"))
        df = pd.read_csv(io.BytesIO(z.read(member)))
    features, classes = df.iloc[:, :16], df.iloc[:, 16:20]
    out = features.copy()
    out.columns = [f"x{i + 1}" for i in range(16)]
    out["class"] = classes.values.argmax(axis=1)
    return out


def credit():
    df = normalized(openml("credit-g"))
    return ordinal_encode(df, skip={"class"})


def satellite():
    df = normalized(openml("satimage"))
    df = df.rename(columns={df.columns[-1]: "class"})
    return df


def phishing():
    df = normalized(openml("PhishingWebsites"))
    return df.apply(pd.to_numeric)


def wine():
    red = normalized(openml("wine-quality-red"))
    white = normalized(openml("wine-quality-white"))
    red["color"], white["color"] = 0, 1
    df = pd.concat([red, white], ignore_index=True)
    df = df.rename(columns={"class": "quality"})
    return df


def fashion_mnist():
    df = openml("Fashion-MNIST")
    label = df.columns[-1]
    out = df.drop(columns=[label]).astype("uint8")
    out.insert(0, "label", df[label].astype(int))
    return out


DATASETS = {
    "breast_cancer": breast_cancer,
    "obs_network": obs_network,
    "cardiotocography": cardiotocography,
    "clave": clave,
    "credit": credit,
    "satellite": satellite,
    "phishing": phishing,
    "wine": wine,
    "fashion_mnist": fashion_mnist,
}


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("names", nargs="*", help=f"datasets to prepare (default: all of {', '.join(DATASETS)})")
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "datasets")
    args = parser.parse_args()
    unknown = [n for n in args.names if n not in DATASETS]
    if unknown:
        parser.error(f"unknown dataset(s): {', '.join(unknown)}")
    args.out.mkdir(parents=True, exist_ok=True)
    failed = []
    for name in args.names or DATASETS:
        try:
            df = DATASETS[name]()
        except Exception as e:  # keep going; report at the end
            print(f"{name}: {e}", file=sys.stderr)
            failed.append(name)
            continue
        path = args.out / f"{name}.csv"
        df.to_csv(path, index=False)
        print(f"{name}: {len(df)} rows, {df.shape[1]} columns -> {path}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
