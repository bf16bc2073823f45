"""Small shared helpers: worker caps, timestamps, chunking."""

import datetime
import os


def max_workers() -> int:
    """Parallelism cap from FTLE_VERIFY_THREADS (default 1, i.e. serial)."""
    raw = os.environ.get("FTLE_VERIFY_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def chunk_slices(total: int, parts: int):
    """Split range(total) into at most `parts` contiguous slices."""
    parts = max(1, min(parts, total)) if total else 1
    step = -(-total // parts)
    return [slice(i, min(i + step, total)) for i in range(0, total, step)]


def utc_timestamp(explicit: str | None = None) -> str:
    """ISO-8601 UTC timestamp.

    Precedence: an explicit value from the config, then the
    SOURCE_DATE_EPOCH convention (for reproducible outputs), then now.
    """
    if explicit:
        return explicit
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.datetime.fromtimestamp(int(epoch), tz=datetime.timezone.utc)
    else:
        moment = datetime.datetime.now(tz=datetime.timezone.utc)
    return moment.replace(microsecond=0).isoformat().replace("+00:00", "Z")
