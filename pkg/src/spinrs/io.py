"""Trajectory CSV and summary JSON files, written atomically."""

import csv
import io
import json
import os
import tempfile

import numpy as np

from .dynamics import Trajectory

FLOAT_FMT = "{:.17g}"


def atomic_write(path, text):
    """Write ``text`` to ``path`` through a temporary file in the same directory."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_header(n, complex_mode=False):
    """Column names of the trajectory CSV.

    Per sample: ``t``; ``q_0..q_n`` (followed by ``im_q_0..im_q_n`` in complex
    mode); ``re_g_ij, im_g_ij`` for every entry in row-major order; then
    ``c_k = Re tr g^k`` for ``k = 1..n``, each followed by ``im_c_k`` in
    complex mode.
    """
    m = n + 1
    cols = ["t"] + [f"q_{i}" for i in range(m)]
    if complex_mode:
        cols += [f"im_q_{i}" for i in range(m)]
    for i in range(m):
        for j in range(m):
            cols += [f"re_g_{i}{j}" if m <= 10 else f"re_g_{i}_{j}",
                     f"im_g_{i}{j}" if m <= 10 else f"im_g_{i}_{j}"]
    for k in range(1, m):
        cols.append(f"c_{k}")
        if complex_mode:
            cols.append(f"im_c_{k}")
    return cols


def _fmt(x):
    return FLOAT_FMT.format(float(x))


def trajectory_rows(traj, complex_mode=False):
    m = np.shape(traj.g)[-1]
    for k in range(len(traj)):
        q = np.asarray(traj.q[k])
        g = np.asarray(traj.g[k], dtype=complex)
        row = [_fmt(traj.times[k])] + [_fmt(x) for x in q.real]
        if complex_mode:
            row += [_fmt(x) for x in np.imag(q)]
        for z in g.ravel():
            row += [_fmt(z.real), _fmt(z.imag)]
        for c in traj.conserved[k][: m - 1]:
            row.append(_fmt(c.real))
            if complex_mode:
                row.append(_fmt(c.imag))
        yield row


def trajectory_csv(traj, n, complex_mode=False):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(csv_header(n, complex_mode))
    w.writerows(trajectory_rows(traj, complex_mode))
    return buf.getvalue()


def write_trajectory(path, traj, n, complex_mode=False):
    atomic_write(path, trajectory_csv(traj, n, complex_mode))


def read_trajectory(path):
    """Parse a trajectory CSV back into a :class:`Trajectory`.

    The mode is inferred from the header.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(x) for x in row] for row in reader], dtype=float)
    complex_mode = "im_q_0" in header
    m = sum(1 for c in header if c.startswith("q_"))
    if header != csv_header(m - 1, complex_mode):
        raise ValueError("unrecognized trajectory CSV header")
    data = data.reshape(-1, len(header))
    col = {name: i for i, name in enumerate(header)}
    t = data[:, 0]
    q = data[:, 1:1 + m]
    if complex_mode:
        q = q + 1j * data[:, 1 + m:1 + 2 * m]
    start = col["re_g_00" if m <= 10 else "re_g_0_0"]
    gcols = data[:, start:start + 2 * m * m]
    g = (gcols[:, 0::2] + 1j * gcols[:, 1::2]).reshape(-1, m, m)
    return Trajectory(t, q, g)


def write_json(path, obj):
    atomic_write(path, json.dumps(obj, indent=2, sort_keys=False, default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, np.floating):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, complex):
        return [x.real, x.imag]
    raise TypeError(f"cannot serialize {type(x).__name__}")
