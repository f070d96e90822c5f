"""JSON and CSV helpers. Floats are written with repr, so reads are bit-exact."""

import csv
import io
import json
import re

import numpy as np


def parse_complex(text):
    """'1+2i', '-0.5i', 'i', '3', '2-1j' -> complex."""
    s = str(text).strip().replace(" ", "").replace("I", "i").replace("j", "i")
    if not s:
        raise ValueError("empty complex number")
    if s.endswith("i"):
        body = s[:-1]
        # split at the last sign that is not part of an exponent
        k = max((m.start() for m in re.finditer(r"(?<![eE])[+-]", body)), default=-1)
        if k <= 0:
            re_part, im_part = "0", body
        else:
            re_part, im_part = body[:k], body[k:]
        if im_part in ("", "+"):
            im_part = "1"
        elif im_part == "-":
            im_part = "-1"
        z = complex(float(re_part), float(im_part))
    else:
        z = complex(float(s), 0.0)
    if not np.isfinite(z.real) or not np.isfinite(z.imag):
        raise ValueError(f"non-finite complex number {text!r}")
    return z


def cjson(z):
    z = complex(z)
    return {"re": z.real, "im": z.imag}


def from_cjson(d):
    return complex(float(d["re"]), float(d["im"]))


def matrix_json(a):
    a = np.asarray(a)
    if np.iscomplexobj(a):
        return [[cjson(x) for x in row] for row in a]
    return [[float(x) for x in row] for row in a]


def dumps(obj):
    return json.dumps(_plain(obj))


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return cjson(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def csv_text(header, columns):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in zip(*columns):
        w.writerow([repr(float(x)) for x in row])
    return buf.getvalue()


def write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(header, columns))


def read_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = np.array([[float(x) for x in r] for r in body]).T if body else np.zeros((len(header), 0))
    return header, {h: c for h, c in zip(header, cols)}
