import csv
import io
import logging
import os
import threading
from pathlib import Path
from typing import Dict, Iterable, Sequence, Tuple

from .workbench_errors import CacheCorrupt

logger = logging.getLogger(__name__)

FIELDS = ("family", "p", "param", "count")
HEADER = ",".join(FIELDS)


def _csv_line(fields: Sequence) -> bytes:
    buffer = io.StringIO()
    csv.writer(buffer, lineterminator="\n").writerow(fields)
    return buffer.getvalue().encode("utf-8")


class TraceCache:
    """
    Point counts keyed by (family, p, parameter), one CSV file per family.

    Records are appended one whole line per write under a single-writer lock, so a reader
    never sees half a record.
    """

    def __init__(self, directory):
        """
        :param directory: Directory holding <family>.csv files; created on first write.
        """
        self.directory: Path = Path(directory)
        self._lock = threading.Lock()

    def path(self, family_id: str) -> Path:
        return self.directory / f"{family_id}.csv"

    def load(self, family_id: str, p: int) -> Dict[str, int]:
        """
        Cached counts for one family and prime.

        :param family_id: The family.
        :param p: The prime.
        :return: {parameter text: count}; CacheCorrupt for a malformed or contradictory file.
        """
        path = self.path(family_id)
        if not path.exists():
            return {}
        counts: Dict[str, int] = {}
        with path.open("r", encoding="utf-8", newline="") as handle:
            try:
                rows = list(csv.reader(handle, strict=True))
            except csv.Error as exc:
                raise CacheCorrupt(f"{path}: unreadable csv ({exc})")
        if not rows:
            return {}
        if tuple(rows[0]) != FIELDS:
            raise CacheCorrupt(f"{path}: bad header '{','.join(rows[0])}'")
        for number, fields in enumerate(rows[1:], start=2):
            if len(fields) != 4 or fields[0] != family_id:
                raise CacheCorrupt(f"{path}:{number}: malformed record '{','.join(fields)}'")
            try:
                prime, count = int(fields[1]), int(fields[3])
            except ValueError:
                raise CacheCorrupt(f"{path}:{number}: malformed record '{','.join(fields)}'")
            if prime != p:
                continue
            param = fields[2]
            if param in counts and counts[param] != count:
                raise CacheCorrupt(f"{path}:{number}: conflicting counts for {param} at p={p}")
            counts[param] = count
        logger.debug("cache %s p=%d: %d records", family_id, p, len(counts))
        return counts

    def append(self, family_id: str, p: int, records: Iterable[Tuple[str, int]]) -> int:
        """
        Append count records for one family and prime.

        :param family_id: The family.
        :param p: The prime.
        :param records: (parameter text, count) pairs.
        :return: Number of records written.
        """
        written = 0
        with self._lock:
            self.directory.mkdir(parents=True, exist_ok=True)
            path = self.path(family_id)
            fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                if os.fstat(fd).st_size == 0:
                    os.write(fd, _csv_line(FIELDS))
                for param, count in records:
                    os.write(fd, _csv_line((family_id, p, param, int(count))))
                    written += 1
            finally:
                os.close(fd)
        logger.debug("cache %s p=%d: appended %d records", family_id, p, written)
        return written
