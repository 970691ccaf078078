"""HTTP wrapper around the command dispatcher.

Run with ``uvicorn twistcur.service:app``. Every endpoint answers 200 with the
exit code inside the body, so clients see the same contract as the CLI.
"""

from __future__ import annotations

from fastapi import FastAPI

from .commands import COMMANDS, gen_fixture, run
from .schemas import Command, FixtureRequest, RunRequest, RunResponse

app = FastAPI(title="twistcur", version="0.1.0")


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "commands": list(COMMANDS)}


@app.post("/run/{command}", response_model=RunResponse)
def run_command(command: Command, req: RunRequest) -> RunResponse:
    res = run(command, req.problem, req.options.to_options())
    return RunResponse(exit_code=res.code, report=res.report)


@app.post("/gen-fixture", response_model=RunResponse)
def generate_fixture(req: FixtureRequest) -> RunResponse:
    res = gen_fixture(req.generator, req.params)
    return RunResponse(exit_code=res.code, report=res.report)
