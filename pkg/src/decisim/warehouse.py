"""Context-tagged prior store plus session persistence.

A single-file embedded store with two logical tables (priors, sessions):
an append-only log of JSON rows, fsynced before a write returns, with the
in-memory indexes rebuilt on open.  A truncated final line (crash mid
write) is ignored on recovery.  Writes are serialized through one lock;
reads work off immutable in-memory records.

Prior distributions are stored as zero-centered spreads: the dialog layer
recenters them on the user's point value, turning "about $500" plus a
stored "maintenance varies by +/-100" into Uniform(400, 600).
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .model import Distribution, dist_from_doc, dist_to_doc

MAGIC = "decisim-store"
VERSION = 1


class StoreError(Exception):
    pass


class StoreUnavailableError(StoreError):
    pass


class DuplicateIdError(StoreError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"record id {record_id!r} already exists")


class UnknownIdError(StoreError):
    def __init__(self, record_id: str):
        self.record_id = record_id
        super().__init__(f"no record with id {record_id!r}")


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class PriorRecord:
    id: str
    context_tags: frozenset[str]
    parameter_name: str
    distribution: Distribution  # zero-centered spread, recentered on use
    source: str
    created_at: str  # ISO 8601


@dataclass(frozen=True)
class SessionRecord:
    id: str
    problem_doc: dict
    objective_source: str
    seed: int
    sample_count: int
    report_doc: dict
    transcript: tuple[tuple[str, str, float], ...]
    feedback: dict | None = None  # {"rating": 1..5 optional, "text": str}
    created_at: str = ""


def _prior_to_doc(rec: PriorRecord) -> dict:
    return {
        "id": rec.id,
        "context_tags": sorted(rec.context_tags),
        "parameter_name": rec.parameter_name,
        "dist": dist_to_doc(rec.distribution),
        "source": rec.source,
        "created_at": rec.created_at,
    }


def _prior_from_doc(doc: dict) -> PriorRecord:
    return PriorRecord(
        id=doc["id"],
        context_tags=frozenset(doc["context_tags"]),
        parameter_name=doc["parameter_name"],
        distribution=dist_from_doc(doc["dist"]),
        source=doc.get("source", ""),
        created_at=doc.get("created_at", ""),
    )


def _session_to_doc(rec: SessionRecord) -> dict:
    return {
        "id": rec.id,
        "problem": rec.problem_doc,
        "objective": rec.objective_source,
        "seed": rec.seed,
        "sample_count": rec.sample_count,
        "report": rec.report_doc,
        "transcript": [list(t) for t in rec.transcript],
        "feedback": rec.feedback,
        "created_at": rec.created_at,
    }


def _session_from_doc(doc: dict) -> SessionRecord:
    return SessionRecord(
        id=doc["id"],
        problem_doc=doc["problem"],
        objective_source=doc["objective"],
        seed=doc["seed"],
        sample_count=doc["sample_count"],
        report_doc=doc["report"],
        transcript=tuple((t[0], t[1], t[2]) for t in doc.get("transcript", [])),
        feedback=doc.get("feedback"),
        created_at=doc.get("created_at", ""),
    )


class Warehouse:
    """Embedded prior/session store backed by one append-only log file."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._priors: dict[str, PriorRecord] = {}
        self._sessions: dict[str, SessionRecord] = {}
        self._insert_order: dict[str, int] = {}
        self._fh = None
        self._open()

    def _open(self) -> None:
        try:
            exists = self.path.exists() and self.path.stat().st_size > 0
            if exists:
                self._recover()
            self._fh = open(self.path, "a", encoding="utf-8")
            if not exists:
                self._append({"magic": MAGIC, "version": VERSION})
        except OSError as exc:
            raise StoreUnavailableError(f"cannot open store at {self.path}: {exc}") from exc

    def _recover(self) -> None:
        with open(self.path, "r", encoding="utf-8") as fh:
            lines = fh.read().split("\n")
        if not lines:
            return
        try:
            header = json.loads(lines[0])
        except json.JSONDecodeError as exc:
            raise StoreError(f"corrupt store header: {exc}") from exc
        if header.get("magic") != MAGIC:
            raise StoreError(f"{self.path} is not a decisim store")
        if header.get("version") != VERSION:
            raise StoreError(f"unsupported store version {header.get('version')}")
        for i, line in enumerate(lines[1:]):
            if not line:
                continue
            try:
                row = json.loads(line)
            except json.JSONDecodeError:
                # Torn tail from a crash mid-append; everything before it is intact.
                break
            self._apply(row, i)

    def _apply(self, row: dict, order: int) -> None:
        kind = row.get("t")
        if kind == "prior":
            rec = _prior_from_doc(row["row"])
            self._priors[rec.id] = rec
            self._insert_order[rec.id] = order
        elif kind == "session":
            rec = _session_from_doc(row["row"])
            self._sessions[rec.id] = rec
        elif kind == "feedback":
            sid = row["id"]
            if sid in self._sessions:
                self._sessions[sid] = replace(self._sessions[sid], feedback=row["feedback"])

    def _append(self, row: dict) -> None:
        if self._fh is None:
            raise StoreUnavailableError("store is closed")
        self._fh.write(json.dumps(row, separators=(",", ":")) + "\n")
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        with self._lock:
            if self._fh is not None:
                self._fh.close()
                self._fh = None

    # -- priors ------------------------------------------------------------

    def add_prior(self, record: PriorRecord) -> str:
        with self._lock:
            if record.id in self._priors:
                raise DuplicateIdError(record.id)
            if not record.created_at:
                record = replace(record, created_at=utc_now())
            self._append({"t": "prior", "row": _prior_to_doc(record)})
            self._priors[record.id] = record
            self._insert_order[record.id] = len(self._insert_order)
            return record.id

    def query_priors(self, tags: set[str], parameter_name: str) -> list[PriorRecord]:
        """Priors for one parameter, ranked by tag overlap then recency.

        Records with no tag in common are excluded; an empty result is a
        normal answer, not an error.
        """
        if self._fh is None:
            raise StoreUnavailableError("store is closed")
        tags = set(tags)
        matches = [
            rec for rec in self._priors.values()
            if rec.parameter_name == parameter_name and tags & rec.context_tags
        ]
        return sorted(
            matches,
            key=lambda r: (len(tags & r.context_tags), r.created_at, self._insert_order[r.id]),
            reverse=True,
        )

    # -- sessions ----------------------------------------------------------

    def record_session(self, record: SessionRecord) -> str:
        """Persist a completed session; durable before this returns."""
        with self._lock:
            if record.id in self._sessions:
                raise DuplicateIdError(record.id)
            if not record.created_at:
                record = replace(record, created_at=utc_now())
            self._append({"t": "session", "row": _session_to_doc(record)})
            self._sessions[record.id] = record
            return record.id

    def attach_feedback(self, record_id: str, feedback: dict) -> SessionRecord:
        with self._lock:
            if record_id not in self._sessions:
                raise UnknownIdError(record_id)
            self._append({"t": "feedback", "id": record_id, "feedback": feedback})
            updated = replace(self._sessions[record_id], feedback=feedback)
            self._sessions[record_id] = updated
            return updated

    def get_session(self, record_id: str) -> SessionRecord:
        try:
            return self._sessions[record_id]
        except KeyError:
            raise UnknownIdError(record_id) from None

    def sessions(self) -> list[SessionRecord]:
        return list(self._sessions.values())

    def priors(self) -> list[PriorRecord]:
        return list(self._priors.values())

    # -- import/export -----------------------------------------------------

    def export_jsonl(self, path: str | Path) -> int:
        """Dump priors and sessions as one table-tagged JSON line each."""
        count = 0
        with open(path, "w", encoding="utf-8") as fh:
            for rec in self._priors.values():
                fh.write(json.dumps({"table": "priors", "row": _prior_to_doc(rec)}) + "\n")
                count += 1
            for rec in self._sessions.values():
                fh.write(json.dumps({"table": "sessions", "row": _session_to_doc(rec)}) + "\n")
                count += 1
        return count

    def import_jsonl(self, path: str | Path) -> int:
        """Load rows exported by export_jsonl; existing ids are skipped."""
        count = 0
        with open(path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                doc = json.loads(line)
                if doc.get("table") == "priors":
                    rec = _prior_from_doc(doc["row"])
                    if rec.id not in self._priors:
                        self.add_prior(rec)
                        count += 1
                elif doc.get("table") == "sessions":
                    rec = _session_from_doc(doc["row"])
                    if rec.id not in self._sessions:
                        self.record_session(rec)
                        count += 1
        return count


def load_starter_priors(store: Warehouse) -> int:
    """Seed the store with the bundled illustrative vehicle priors."""
    from importlib.resources import files

    data = files("decisim").joinpath("data/starter_priors.jsonl").read_text(encoding="utf-8")
    count = 0
    for line in data.splitlines():
        if not line.strip():
            continue
        doc = json.loads(line)
        rec = _prior_from_doc(doc["row"])
        if rec.id not in {r.id for r in store.priors()}:
            store.add_prior(rec)
            count += 1
    return count


def replay_session(record: SessionRecord) -> dict:
    """Re-run a stored snapshot; equals the stored report for a sound store."""
    from .model import problem_from_doc
    from .optimizer import analyze, report_to_doc

    problem = problem_from_doc(record.problem_doc)
    return report_to_doc(analyze(problem))
