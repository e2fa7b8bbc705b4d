"""
Local configuration and storage for siedm.
Handles preferences, atomic index writes, and the JSONL event log.
"""

import collections
import datetime
import json
import logging
import os
import tempfile
import threading

logger = logging.getLogger(__name__)

# Serializes appends and truncation of the event log within the process.
_STORE_LOCK = threading.Lock()

BASE_DIR = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(BASE_DIR, "data")
CONFIG_DIR = os.path.join(BASE_DIR, "config")

OUTPUT_FORMATS = ("tsv", "json")
TIE_BREAKS = ("right", "creation")


def _load_json(path: str) -> dict:
    if not os.path.exists(path):
        return {}
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except (json.JSONDecodeError, OSError) as e:
        # Rename aside so the user can inspect it, and fall back to defaults.
        logger.warning("Could not load %s (%s); renaming to .corrupt and using defaults", path, e)
        try:
            os.rename(path, path + ".corrupt")
        except OSError:
            pass
        return {}
    if not isinstance(data, dict):
        logger.warning("Ignoring %s: expected a JSON object, got %s", path, type(data).__name__)
        return {}
    return data


def atomic_write(path: str, write_fn, mode: str = "w"):
    """Write a file atomically: write to a unique temp file in the same
    directory, fsync, then rename over the target. A crash mid-write never
    leaves a truncated index behind. OSErrors are logged and re-raised."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(
        dir=directory, prefix=os.path.basename(path) + ".", suffix=".tmp",
    )
    try:
        with os.fdopen(fd, mode) as f:
            write_fn(f)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp_path, path)
    except Exception as e:
        logger.error("Failed to save %s: %s", path, e)
        try:
            os.remove(tmp_path)
        except OSError:
            pass
        raise


def write_bytes(path: str, data: bytes):
    atomic_write(path, lambda f: f.write(data), mode="wb")


# --- Preferences ---

DEFAULT_PREFS = {
    "output_format": "tsv",
    "threads": 1,
    "tie_break": "right",
    "cv_stride": 2,
    "oracle_max_len": 6,
    "oracle_max_depth": 3,
    "event_log": "data/logs/events.log",
}


def prefs_path() -> str:
    return os.environ.get("SIEDM_CONFIG") or os.path.join(CONFIG_DIR, "preferences.json")


def _coerce(prefs: dict) -> dict:
    """Drop values of the wrong shape back to their defaults, so a stale or
    hand-edited file never reaches the index code."""
    out = dict(prefs)
    for key in ("threads", "cv_stride", "oracle_max_len", "oracle_max_depth"):
        value = out.get(key)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            if key in prefs:
                logger.warning("preferences: invalid %s=%r, using %r", key, value, DEFAULT_PREFS[key])
            out[key] = DEFAULT_PREFS[key]
    if out.get("output_format") not in OUTPUT_FORMATS:
        out["output_format"] = DEFAULT_PREFS["output_format"]
    if out.get("tie_break") not in TIE_BREAKS:
        out["tie_break"] = DEFAULT_PREFS["tie_break"]
    if not isinstance(out.get("event_log"), str) or not out["event_log"]:
        out["event_log"] = DEFAULT_PREFS["event_log"]
    return out


def get_preferences() -> dict:
    """Preferences file merged over DEFAULT_PREFS; SIEDM_THREADS overrides
    the thread count. Missing files are not created."""
    prefs = DEFAULT_PREFS.copy()
    prefs.update(_load_json(prefs_path()))
    env_threads = os.environ.get("SIEDM_THREADS")
    if env_threads:
        try:
            prefs["threads"] = int(env_threads)
        except ValueError:
            logger.warning("SIEDM_THREADS=%r is not an integer; ignoring", env_threads)
    return _coerce(prefs)


def debug_enabled() -> bool:
    return os.environ.get("SIEDM_DEBUG", "").lower() in ("1", "true", "yes")


# --- Event log ---
# Append-only JSONL. When the file passes the byte cap it is rewritten
# keeping only the newest _LOG_KEEP_LINES lines.

_LOG_MAX_BYTES = 2_000_000
_LOG_KEEP_LINES = 5000


def event_log_path() -> str:
    path = get_preferences()["event_log"]
    return path if os.path.isabs(path) else os.path.join(BASE_DIR, path)


def _truncate_log(path: str, keep: int):
    try:
        with open(path, "r") as f:
            tail = collections.deque(f, maxlen=keep)
        tmp = path + ".tmp"
        with open(tmp, "w") as f:
            f.writelines(tail)
        os.replace(tmp, path)
    except OSError as e:
        logger.warning("event log truncate failed (%s): %s", path, e)


def log_event(event: str, path: str | None = None, **fields):
    """Append one event record. Failures are logged, never raised: a
    read-only checkout must still be able to build and search."""
    path = path or event_log_path()
    record = {
        "ts": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "event": event,
    }
    record.update(fields)
    try:
        with _STORE_LOCK:
            os.makedirs(os.path.dirname(path), exist_ok=True)
            with open(path, "a") as f:
                f.write(json.dumps(record, default=str) + "\n")
            if os.path.getsize(path) > _LOG_MAX_BYTES:
                _truncate_log(path, _LOG_KEEP_LINES)
    except OSError as e:
        logger.warning("event log write failed (%s): %s", path, e)


def tail_events(n: int = 100, path: str | None = None) -> list[dict]:
    """Return the last n events from the event log."""
    path = path or event_log_path()
    if not os.path.exists(path):
        return []
    try:
        with open(path, "r") as f:
            lines = collections.deque(f, maxlen=n)
    except OSError:
        return []
    out: list[dict] = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            out.append(json.loads(line))
        except json.JSONDecodeError:
            continue
    return out
