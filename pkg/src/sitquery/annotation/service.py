"""HTTP annotation service.

JSON API under /api plus a static annotation page at /. The store handles
locking, so handlers stay thin request/response adapters.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import HTMLResponse, PlainTextResponse
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel

from sitquery.annotation.store import AnnotationStore
from sitquery.errors import (
    DuplicateAnnotationError,
    SchemaError,
    UnknownTaskError,
)
from sitquery.evaluate import Answer

log = logging.getLogger(__name__)

FALLBACK_PAGE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>Annotation</title>
<style>
body { font-family: sans-serif; max-width: 40rem; margin: 3rem auto; }
#query { font-size: 1.4rem; margin: 1.5rem 0; }
button { font-size: 1rem; padding: 0.5rem 1.2rem; margin-right: 0.6rem; }
#status { color: #666; margin-top: 1rem; }
.badge { background: #eee; border-radius: 4px; padding: 0.1rem 0.5rem; font-size: 0.8rem; }
</style>
</head>
<body>
<h1>Annotation</h1>
<p>Worker: <input id="worker" value="worker-1"> <button onclick="next()">Start</button></p>
<p><span id="level" class="badge"></span></p>
<div id="query">Press Start.</div>
<div id="buttons" hidden>
<button onclick="submit('Yes')">Yes (y)</button>
<button onclick="submit('No')">No (n)</button>
<button onclick="submit('CannotAnswer')">Cannot answer (c)</button>
</div>
<div id="status"></div>
<script>
let task = null;
async function next() {
  const worker = document.getElementById('worker').value;
  const res = await fetch('/api/tasks/next?worker=' + encodeURIComponent(worker));
  const body = await res.json();
  task = body.task;
  const q = document.getElementById('query');
  const buttons = document.getElementById('buttons');
  if (!task) { q.textContent = 'No tasks left for this worker.'; buttons.hidden = true; return; }
  q.textContent = task.text;
  document.getElementById('level').textContent = task.level;
  buttons.hidden = false;
}
async function submit(answer) {
  if (!task) return;
  const worker = document.getElementById('worker').value;
  const res = await fetch('/api/annotations', {
    method: 'POST',
    headers: {'Content-Type': 'application/json'},
    body: JSON.stringify({worker: worker, task_id: task.task_id, answer: answer}),
  });
  const body = await res.json();
  document.getElementById('status').textContent =
    res.ok ? 'Recorded ' + answer + ' for ' + task.task_id : 'Error: ' + JSON.stringify(body);
  if (res.ok) next();
}
document.addEventListener('keydown', (e) => {
  if (e.target.tagName === 'INPUT') return;
  if (e.key === 'y') submit('Yes');
  if (e.key === 'n') submit('No');
  if (e.key === 'c') submit('CannotAnswer');
});
</script>
</body>
</html>
"""


class AnnotationIn(BaseModel):
    worker: str
    task_id: str
    answer: str


def create_app(store: AnnotationStore, ui_dir: Optional[str] = None) -> FastAPI:
    app = FastAPI(title="sitquery annotation service")

    @app.get("/api/tasks/next")
    def next_task(worker: str = Query(..., min_length=1)):
        task = store.next_task(worker)
        if task is None:
            return {"task": None}
        record = task.to_record()
        record["votes_so_far"] = store.vote_count(task.task_id)
        return {"task": record}

    @app.post("/api/annotations")
    def post_annotation(body: AnnotationIn):
        try:
            answer = Answer.from_json(body.answer)
        except SchemaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            votes = store.submit(body.worker, body.task_id, answer)
        except UnknownTaskError as exc:
            raise HTTPException(status_code=404, detail=str(exc))
        except DuplicateAnnotationError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        except SchemaError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "status": "ok",
            "task_id": body.task_id,
            "votes": votes,
            "complete": votes >= store.votes_required,
        }

    @app.get("/api/progress")
    def progress():
        return store.progress()

    @app.get("/api/groundtruth")
    def groundtruth():
        import json as _json

        lines = [_json.dumps(row, ensure_ascii=True) for row in store.groundtruth_rows()]
        text = "\n".join(lines)
        if text:
            text += "\n"
        return PlainTextResponse(text, media_type="application/x-ndjson")

    @app.get("/api/summary")
    def summary():
        return store.study_summary()

    if ui_dir and Path(ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")
        log.info("serving annotation UI from %s", ui_dir)
    else:
        if ui_dir:
            log.warning("UI directory %s not found; using the built-in page", ui_dir)

        @app.get("/", response_class=HTMLResponse)
        def root():
            return FALLBACK_PAGE

    return app


def serve(store: AnnotationStore, host: str = "127.0.0.1", port: int = 8008,
          ui_dir: Optional[str] = None) -> None:
    import uvicorn

    app = create_app(store, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="info")
