"""JSON documents and CSV tables written by the command line."""
# stdlib
import csv
import json
import logging
import os

# External modules
import numpy as np

from anisoscale.core import VerificationReport

# Set up logger
logger = logging.getLogger(__name__)


def _encode(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if hasattr(value, "_asdict"):
        return value._asdict()
    if isinstance(value, (set, frozenset)):
        return sorted(value)
    raise TypeError("%s is not serializable" % type(value).__name__)


def dumps(document):
    """Canonical JSON text of a document; numpy values and namedtuples are converted."""
    return json.dumps(document, default=_encode, indent=2, sort_keys=True)


def write_json(path, document):
    """Write a JSON document, creating the parent directory."""
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w") as handle:
        handle.write(dumps(document))
        handle.write("\n")
    logger.info("[io] Wrote %s", path)
    return path


def read_json(path):
    with open(path) as handle:
        return json.load(handle)


def write_csv(path, rows, fieldnames=None):
    """Write dict rows as a CSV table with a header line."""
    rows = list(rows)
    if fieldnames is None:
        fieldnames = list(rows[0]) if rows else []
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.DictWriter(handle, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    logger.info("[io] Wrote %d rows to %s", len(rows), path)
    return path


def report_to_dict(report):
    """Key-value form of a :class:`VerificationReport`, decodable by :func:`report_from_dict`."""
    return json.loads(dumps(report._asdict()))


def report_from_dict(data):
    """Rebuild a :class:`VerificationReport` from a saved document."""
    return VerificationReport(**{field: data.get(field) for field in VerificationReport._fields})


def replicate_rows(stats):
    """CSV rows ``lambda, replicate, S, seed`` of a :class:`ReplicateStats`."""
    return [{"lambda": stats.lam, "replicate": i, "S": float(value), "seed": seed}
            for i, (value, seed) in enumerate(zip(stats.values, stats.seeds))]
