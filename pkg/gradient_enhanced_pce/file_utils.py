"""
Utilities for reproducible runs: seed derivation, build identification and
writing report files inside an output directory.
"""
from __future__ import (absolute_import, division, print_function, unicode_literals)

import csv
import json
import logging
import os
import subprocess
import sys
from hashlib import sha256
from io import open

from tqdm import tqdm

logger = logging.getLogger(__name__)  # pylint: disable=invalid-name

WORKERS_ENV = 'GRADIENT_PCE_WORKERS'
BUILD_ENV = 'GRADIENT_PCE_BUILD'

# Set by the CLI from --verbosity; progress bars are shown only when positive.
PROGRESS_VERBOSITY = 1


def derive_seed(seed, stream, index=0):
    """
    Derive a 63-bit child seed from the global `seed` in a repeatable way.

    The child seed is the first 8 bytes of sha256("<seed>:<stream>:<index>"), so it
    depends only on the counter triple and never on the order in which jobs run.
    """
    key = "{}:{}:{}".format(seed, stream, index).encode('utf-8')
    return int.from_bytes(sha256(key).digest()[:8], 'big') >> 1


def build_identifier():
    """
    Return a git-describe style identifier of the running code.
    ``GRADIENT_PCE_BUILD`` wins, then ``git describe`` of the source tree,
    then the package version.
    """
    from . import __version__

    build = os.getenv(BUILD_ENV)
    if build:
        return build
    source_dir = os.path.dirname(os.path.abspath(__file__))
    try:
        output = subprocess.check_output(['git', 'describe', '--always', '--dirty', '--tags'],
                                         cwd=source_dir, stderr=subprocess.DEVNULL)
        described = output.decode('utf-8').strip()
        if described:
            return described
    except (OSError, subprocess.CalledProcessError):
        pass
    return "v{}".format(__version__)


def worker_count(default=1):
    """ Size of the replication worker pool, from ``GRADIENT_PCE_WORKERS``. """
    value = os.getenv(WORKERS_ENV)
    if value is None or value == '':
        return default
    try:
        workers = int(value)
    except ValueError:
        raise ValueError("Invalid {}: {} - should be an integer >= 1".format(WORKERS_ENV, value))
    if workers < 1:
        raise ValueError("Invalid {}: {} - should be an integer >= 1".format(WORKERS_ENV, value))
    return workers


def progress(iterable, desc=None, total=None):
    """ Wrap `iterable` in a tqdm bar, silent when not verbose or not on a terminal. """
    disable = PROGRESS_VERBOSITY <= 0 or not sys.stderr.isatty()
    return tqdm(iterable, desc=desc, total=total, disable=disable, leave=False)


def output_path(out_dir, filename):
    """
    Resolve `filename` inside `out_dir`, creating the directory if needed.
    Raise ``ValueError`` if the resolved path escapes `out_dir`.
    """
    root = os.path.realpath(out_dir)
    path = os.path.realpath(os.path.join(root, filename))
    if os.path.commonpath([root, path]) != root:
        raise ValueError("Refusing to write {} outside of output directory {}".format(filename, out_dir))
    if not os.path.isdir(root):
        os.makedirs(root)
    return path


def to_serializable(obj):
    """ Convert numpy scalars and arrays nested in `obj` to plain python values. """
    if isinstance(obj, dict):
        return dict((str(key), to_serializable(value)) for key, value in obj.items())
    if isinstance(obj, (list, tuple)):
        return [to_serializable(value) for value in obj]
    if hasattr(obj, 'tolist'):
        return obj.tolist()
    return obj


def json_string(obj):
    """ Deterministic JSON text: sorted keys, 2-space indent, trailing newline. """
    return json.dumps(to_serializable(obj), indent=2, sort_keys=True) + "\n"


def write_json(out_dir, filename, obj):
    """ Write `obj` as deterministic JSON to `out_dir`/`filename` and return the path. """
    path = output_path(out_dir, filename)
    with open(path, "w", encoding='utf-8') as writer:
        writer.write(json_string(obj))
    logger.info("Wrote {}".format(path))
    return path


def format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(out_dir, filename, header, rows):
    """ Write `header` and `rows` as CSV to `out_dir`/`filename`, floats in round-trip form. """
    path = output_path(out_dir, filename)
    with open(path, "w", encoding='utf-8', newline='') as writer:
        csv_writer = csv.writer(writer, lineterminator='\n')
        csv_writer.writerow(header)
        for row in rows:
            csv_writer.writerow([format_value(to_serializable(value)) for value in row])
    logger.info("Wrote {}".format(path))
    return path
