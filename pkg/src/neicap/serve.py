"""HTTP adjudication service backing the companion browser UI.

Endpoints (JSON bodies; error bodies carry machine-readable codes
not_found / conflict / invalid_input):

    GET  /session/{id}/next      next blinded item or a done marker
    POST /session/{id}/label     submit {"item_id", "decision", "subtype"?}
    GET  /packet/{id}/progress   per-session completion counts
    GET  /packet/{id}/export     per-annotator annotations + merged disagreement view

Sessions are created at startup, one per annotator plus a "consensus" session
used by the review mode to post resolution records. Accepted labels are appended
to a JSONL log and fsynced before the acknowledgment, and the in-memory state is
rebuilt from that log at startup, so acknowledged labels survive restarts.
Blinding holds at the wire: no response body ever contains a gold-label,
construction, or prediction field name.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse

from .validate import (
    AdjudicationRecord,
    CONSENSUS_ANNOTATOR,
    Packet,
    merge_consensus,
    read_packet,
)
from .errors import AdjudicationError

DEFAULT_ANNOTATORS = ("a1", "a2")


@dataclass
class Session:
    session_id: str
    annotator_id: str
    packet_id: str
    submitted: dict[str, AdjudicationRecord] = field(default_factory=dict)

    def cursor(self, packet: Packet) -> int:
        for i, item in enumerate(packet.items):
            if item.item_id not in self.submitted:
                return i
        return len(packet.items)


def _error(status: int, code: str, detail: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"code": code, "detail": detail})


class AdjudicationStore:
    """Append-only JSONL store with replay; writes are serialized by a lock."""

    def __init__(self, packet: Packet, annotators, store_path):
        self.packet = packet
        self.store_path = Path(store_path)
        self.lock = threading.Lock()
        self.sessions: dict[str, Session] = {}
        for annotator in list(annotators) + [CONSENSUS_ANNOTATOR]:
            self.sessions[annotator] = Session(
                session_id=annotator,
                annotator_id=annotator,
                packet_id=packet.packet_id,
            )
        self._replay()

    def _replay(self) -> None:
        if not self.store_path.exists():
            return
        for line in self.store_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            if obj.get("packet_id") != self.packet.packet_id:
                continue
            sid = obj["session_id"]
            if sid not in self.sessions:
                self.sessions[sid] = Session(
                    session_id=sid,
                    annotator_id=obj.get("annotator_id", sid),
                    packet_id=self.packet.packet_id,
                )
            rec = AdjudicationRecord(
                item_id=obj["item_id"],
                annotator_id=obj.get("annotator_id", sid),
                label=obj["decision"],
                subtype=obj.get("subtype"),
                timestamp=obj.get("timestamp", ""),
            )
            self.sessions[sid].submitted[rec.item_id] = rec

    def submit(self, session: Session, record: AdjudicationRecord) -> int:
        """Durably append one record; returns the session's completed count."""
        entry = {
            "packet_id": self.packet.packet_id,
            "session_id": session.session_id,
            "annotator_id": record.annotator_id,
            "item_id": record.item_id,
            "decision": record.label,
            "timestamp": record.timestamp,
        }
        if record.subtype is not None:
            entry["subtype"] = record.subtype
        with open(self.store_path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry) + "\n")
            fh.flush()
            os.fsync(fh.fileno())
        session.submitted[record.item_id] = record
        return len(session.submitted)


def create_app(
    packet: Packet,
    annotators=DEFAULT_ANNOTATORS,
    store_path="adjudication_log.jsonl",
    static_dir=None,
) -> FastAPI:
    store = AdjudicationStore(packet, annotators, store_path)
    app = FastAPI(title="neicap adjudication service")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.store = store
    item_ids = {item.item_id for item in packet.items}

    @app.get("/session/{session_id}/next")
    def next_item(session_id: str):
        session = store.sessions.get(session_id)
        if session is None:
            return _error(404, "not_found", f"unknown session {session_id}")
        cursor = session.cursor(packet)
        if cursor >= len(packet.items):
            return {
                "done": True,
                "total": len(packet.items),
                "completed": len(session.submitted),
            }
        item = packet.items[cursor]
        return {
            "item_id": item.item_id,
            "claim": item.claim,
            "evidence": item.evidence,
            "position": cursor,
            "total": len(packet.items),
        }

    @app.post("/session/{session_id}/label")
    async def submit_label(session_id: str, body: dict):
        session = store.sessions.get(session_id)
        if session is None:
            return _error(404, "not_found", f"unknown session {session_id}")
        item_id = body.get("item_id")
        decision = body.get("decision")
        subtype = body.get("subtype")
        if not item_id or item_id not in item_ids:
            return _error(400, "invalid_input", f"unknown item {item_id!r}")
        try:
            record = AdjudicationRecord(
                item_id=item_id,
                annotator_id=session.annotator_id,
                label=decision if decision is not None else "",
                subtype=subtype,
                timestamp=datetime.now(timezone.utc).isoformat(),
            )
        except AdjudicationError as exc:
            return _error(400, "invalid_input", str(exc))
        with store.lock:
            if item_id in session.submitted:
                return _error(409, "conflict", f"item {item_id} already submitted")
            completed = store.submit(session, record)
        return {
            "ok": True,
            "progress": {"completed": completed, "total": len(packet.items)},
        }

    @app.get("/packet/{packet_id}/progress")
    def progress(packet_id: str):
        if packet_id != packet.packet_id:
            return _error(404, "not_found", f"unknown packet {packet_id}")
        sessions = []
        for sid in sorted(store.sessions):
            sessions.append(
                {
                    "session_id": sid,
                    "completed": len(store.sessions[sid].submitted),
                }
            )
        return {
            "packet_id": packet.packet_id,
            "total": len(packet.items),
            "sessions": sessions,
        }

    @app.get("/packet/{packet_id}/export")
    def export(packet_id: str):
        if packet_id != packet.packet_id:
            return _error(404, "not_found", f"unknown packet {packet_id}")
        order = {item.item_id: i for i, item in enumerate(packet.items)}
        annotations = {}
        for sid in sorted(store.sessions):
            session = store.sessions[sid]
            rows = sorted(
                session.submitted.values(), key=lambda r: order.get(r.item_id, 1 << 30)
            )
            annotations[sid] = [r.to_json() for r in rows]
        body: dict = {"packet_id": packet.packet_id, "annotations": annotations}
        primary = [s for s in sorted(store.sessions) if s != CONSENSUS_ANNOTATOR]
        if len(primary) == 2:
            a = list(store.sessions[primary[0]].submitted.values())
            b = list(store.sessions[primary[1]].submitted.values())
            if {r.item_id for r in a} == {r.item_id for r in b}:
                resolutions = list(
                    store.sessions[CONSENSUS_ANNOTATOR].submitted.values()
                )
                try:
                    merge = merge_consensus(a, b, resolutions)
                except AdjudicationError:
                    merge = merge_consensus(a, b)
                body["disagreements"] = [
                    {
                        "item_id": d.item_id,
                        "sides": {
                            primary[0]: d.a.to_json(),
                            primary[1]: d.b.to_json(),
                        },
                    }
                    for d in merge.disagreements
                ]
                body["agreement"] = {
                    "raw": merge.raw_agreement,
                    "binary": merge.binary_agreement,
                }
                body["finals"] = [
                    {
                        "item_id": f.item_id,
                        "decision": f.label,
                        "subtype": f.subtype,
                        "source": f.source,
                    }
                    for f in (merge.finals[k] for k in sorted(merge.finals))
                ]
        return body

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def run_server(
    packet_path,
    port: int = 8765,
    annotators=DEFAULT_ANNOTATORS,
    store_path="adjudication_log.jsonl",
    static_dir=None,
) -> None:
    import uvicorn

    packet = read_packet(packet_path)
    app = create_app(packet, annotators, store_path, static_dir)
    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
