"""HTTP service dispensing annotation tasks and collecting intent labels."""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from .gold import MULTI_INTENT, SINGLE_INTENT, AnnotationRecord, build_gold
from .weak_label import MultiHotLabel


class AnnotationStore:
    """Append-only log of accepted submissions; the log is the source of truth.

    Log line format: `ts<TAB>annotator<TAB>query_id<TAB>i,t,n<TAB>mode`.
    Replay on startup restores every acknowledged submission.
    """

    def __init__(self, queries: Sequence[Tuple[str, Tuple[str, ...]]],
                 annotators: Dict[str, str], log_path):
        for mode in annotators.values():
            if mode not in (MULTI_INTENT, SINGLE_INTENT):
                raise ValueError("unknown annotator mode %r" % mode)
        self.queries = list(queries)
        self.order = [qid for qid, _ in self.queries]
        self.tokens = {qid: tuple(toks) for qid, toks in self.queries}
        self.annotators = dict(annotators)
        self.log_path = Path(log_path)
        self._lock = threading.Lock()
        self.labels: Dict[Tuple[str, str], Tuple[int, int, int]] = {}
        if self.log_path.exists():
            self._replay()

    def _replay(self) -> None:
        with open(self.log_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                _, annotator, qid, bits_raw, _mode = line.split("\t")
                bits = tuple(int(b) for b in bits_raw.split(","))
                self.labels[(annotator, qid)] = bits

    def next_task(self, annotator: str) -> Optional[dict]:
        if annotator not in self.annotators:
            raise KeyError(annotator)
        for qid in self.order:
            if (annotator, qid) not in self.labels:
                return {"query_id": qid, "tokens": list(self.tokens[qid]),
                        "mode": self.annotators[annotator]}
        return None

    def submit(self, annotator: str, query_id: str, bits: Sequence[int]) -> None:
        if annotator not in self.annotators:
            raise KeyError(annotator)
        if query_id not in self.tokens:
            raise KeyError(query_id)
        bits = tuple(int(b) for b in bits)
        if len(bits) != 3 or any(b not in (0, 1) for b in bits):
            raise ValueError("bits must be three 0/1 values")
        if sum(bits) == 0:
            raise ValueError("at least one intent bit must be set")
        mode = self.annotators[annotator]
        if mode == SINGLE_INTENT and sum(bits) != 1:
            raise ValueError("single-intent annotators must set exactly one bit")
        with self._lock:
            if (annotator, query_id) in self.labels:
                raise FileExistsError("duplicate submission")
            line = "%d\t%s\t%s\t%d,%d,%d\t%s\n" % (
                int(time.time() * 1000), annotator, query_id, bits[0], bits[1], bits[2], mode)
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(line)
                fh.flush()
            self.labels[(annotator, query_id)] = bits

    def export(self) -> str:
        """Annotation file in the gold-builder input format; byte-stable."""
        lines = []
        for qid in self.order:
            for annotator in sorted(self.annotators):
                bits = self.labels.get((annotator, qid))
                if bits is None:
                    continue
                lines.append("%s\t%s\t%d,%d,%d\t%s" % (
                    qid, annotator, bits[0], bits[1], bits[2], self.annotators[annotator]))
        return "\n".join(lines) + ("\n" if lines else "")

    def progress(self) -> dict:
        total = len(self.order) * len(self.annotators)
        labeled = len(self.labels)
        records = []
        fully = 0
        for qid in self.order:
            recs = []
            for annotator, mode in self.annotators.items():
                bits = self.labels.get((annotator, qid))
                if bits is not None:
                    recs.append(AnnotationRecord(query_id=qid, annotator_id=annotator,
                                                 label=MultiHotLabel(bits=bits), mode=mode))
            if len(recs) == 3:
                fully += 1
                records.extend(recs)
        gt2, gt3 = build_gold(records) if records else (None, None)
        return {
            "labeled": labeled,
            "total": total,
            "fully_annotated": fully,
            "gt2_count": len(gt2.entries) if gt2 else 0,
            "gt3_count": len(gt3.entries) if gt3 else 0,
        }


class LabelSubmission(BaseModel):
    annotator: str
    query_id: str
    bits: List[int]


def create_app(store: AnnotationStore, static_dir=None) -> FastAPI:
    app = FastAPI(title="qintent annotation service")
    app.state.store = store

    @app.get("/api/task")
    def get_task(annotator: str):
        try:
            task = store.next_task(annotator)
        except KeyError:
            raise HTTPException(status_code=404, detail="unknown annotator %r" % annotator)
        if task is None:
            return {"done": True}
        return task

    @app.post("/api/label")
    def post_label(sub: LabelSubmission):
        try:
            store.submit(sub.annotator, sub.query_id, sub.bits)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail="unknown id %s" % exc)
        except FileExistsError:
            raise HTTPException(status_code=409, detail="already labeled")
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"ok": True}

    @app.get("/api/export", response_class=PlainTextResponse)
    def get_export():
        return store.export()

    @app.get("/api/progress")
    def get_progress():
        return store.progress()

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="ui")
    return app


def load_queries_file(path) -> List[Tuple[str, Tuple[str, ...]]]:
    """`query_id<TAB>query text` per line; text is tokenized for display."""
    from .corpus import tokenize

    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            qid, text = line.split("\t")
            out.append((qid, tokenize(text).tokens))
    return out


def load_annotators_file(path) -> Dict[str, str]:
    """`annotator_id<TAB>mode` per line."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            aid, mode = line.split("\t")
            out[aid] = mode
    return out
