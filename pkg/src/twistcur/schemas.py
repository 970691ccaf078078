"""Request and response models for the HTTP service."""

from __future__ import annotations

from typing import Any, Literal

from pydantic import BaseModel, Field

from .commands import Options

Command = Literal["validate", "complete-twisting", "extend-morphism", "eval-residue", "check-duality",
                  "check-comparison", "check-homotopy"]
Generator = Literal["koszul", "quotient-pair", "two-chart-glue", "synthetic-twist"]


class RunOptions(BaseModel):
    schedule: str | None = Field(None, description="eps0=...,ratio=...,steps=...")
    mode: Literal["residue", "pv"] = "residue"
    phi: str | None = None
    psi: str | None = None
    alpha: str | None = None
    twisting: str | None = None
    morphism: str | None = None
    claim: Literal["member", "nonmember"] | None = None
    testforms: list[str] = Field(default_factory=list)
    tol_abs: float | None = Field(None, gt=0)
    tol_rel: float | None = Field(None, gt=0)
    degree_bound: int | None = Field(None, ge=0)
    grid: int | None = Field(None, ge=4)

    def to_options(self) -> Options:
        return Options(**self.model_dump())


class RunRequest(BaseModel):
    problem: dict[str, Any]
    options: RunOptions = Field(default_factory=RunOptions)


class FixtureRequest(BaseModel):
    generator: Generator
    params: dict[str, Any] = Field(default_factory=dict)


class RunResponse(BaseModel):
    exit_code: int
    report: dict[str, Any]
