from pathlib import Path
from pydantic import BaseModel, ConfigDict, Field, model_validator
from typing import List, Literal, Optional, Union

Command = Literal["check-wf", "simulate", "compile", "minimize", "emit", "solve", "verify"]

class ResponseTemplate(BaseModel):
    """Whenever `target` follows `source`, it does so within `deadline`."""
    source: str = Field(..., description="Fluent set text, e.g. completes(p)")
    target: str = Field(..., description="Fluent set text, e.g. completes(end)")
    deadline: int = Field(..., ge=0)

class DeadlineTemplate(BaseModel):
    """`target` is never reached later than `deadline`."""
    target: str
    deadline: int = Field(..., ge=0)

class ModelCheckRequest(BaseModel):
    """Request schema for well-formedness checks."""
    model: str = Field(..., description="Process specification in clause syntax")

class ViolationSchema(BaseModel):
    condition: Union[int, str]
    witness: List[str] = []
    message: str = ""

class ModelCheckResponse(BaseModel):
    well_formed: bool
    objects: int
    flows: int
    violations: List[ViolationSchema] = []

class SimulationRequest(BaseModel):
    """Request schema for a single simulated run."""
    model: str
    seed: Optional[int] = None
    policy: Literal["min", "max", "random"] = "random"
    max_steps: int = Field(10_000, gt=0)

class SimulationResponse(BaseModel):
    trace: List[str]
    final_time: int
    steps: int

class CompileRequest(BaseModel):
    """Process plus property, given as a goal clause or as a template."""
    model: str
    property: Optional[str] = Field(None, description="Goal clause in waypoint-chain form")
    response: Optional[ResponseTemplate] = None
    schedulability: Optional[DeadlineTemplate] = None
    minimize: bool = True
    explain: bool = False

    @model_validator(mode="after")
    def exactly_one_property(self) -> "CompileRequest":
        given = [p for p in (self.property, self.response, self.schedulability) if p is not None]
        if len(given) != 1:
            raise ValueError("give exactly one of property, response or schedulability")
        return self

    class Config:
        json_schema_extra = {
            "example": {
                "model": "task(a). start(s). end(e). seq(s,a). seq(a,e). "
                         "duration(a,D) :- D>=1, D=<2. duration(X,D) :- not_task(X), D=0.",
                "schedulability": {"target": "completes(e)", "deadline": 2},
                "minimize": True,
            }
        }

class CompileResponse(BaseModel):
    clauses: str
    clause_count: int
    predicate_count: int
    specialized_clause_count: int
    specialized_predicate_count: int
    partition: List[List[str]] = []
    definitions: Optional[str] = None

class MinimizeRequest(BaseModel):
    clauses: str = Field(..., description="Clause listing in pure form")

class MinimizeResponse(BaseModel):
    clauses: str
    before: int
    after: int
    partition: List[List[str]]

class VerifyRequest(CompileRequest):
    """Full pipeline request; solver and bounds fall back to the settings."""
    solvers: List[str] = []
    timeout: Optional[float] = Field(None, gt=0)
    oracle: bool = True
    max_states: Optional[int] = Field(None, gt=0)
    max_offset: Optional[int] = Field(None, gt=0)

class StageTiming(BaseModel):
    stage: str
    elapsed: float

class SolverReport(BaseModel):
    outcome: str
    solver: str = ""
    elapsed: float = 0.0
    detail: Optional[str] = None

class OracleReport(BaseModel):
    verdict: str
    exhaustive: bool
    states: int
    waypoint_times: List[int] = []
    trace: List[str] = []
    reason: str = ""
    agrees: Optional[bool] = Field(None, description="None when either side is inconclusive")

class VerificationReport(BaseModel):
    """Outcome of one verify run, stage by stage."""
    status: Literal["holds", "violated", "unknown", "solver_error"]
    clauses_before: int
    predicates_before: int
    clauses_after: int
    predicates_after: int
    minimized: bool
    partition: List[List[str]] = []
    stages: List[StageTiming] = []
    solver: SolverReport
    oracle: Optional[OracleReport] = None

class RunConfig(BaseModel):
    """One command-line invocation after argument parsing."""
    model_config = ConfigDict(protected_namespaces=())

    command: Command
    model_path: Optional[Path] = None
    property_path: Optional[Path] = None
    clauses_path: Optional[Path] = None
    response: Optional[ResponseTemplate] = None
    schedulability: Optional[DeadlineTemplate] = None
    solvers: List[str] = []
    timeout: Optional[float] = Field(None, gt=0)
    minimize: bool = True
    seed: Optional[int] = None
    policy: Literal["min", "max", "random"] = "random"
    max_states: Optional[int] = Field(None, gt=0)
    max_offset: Optional[int] = Field(None, gt=0)
    out: Optional[Path] = None
    format: Literal["text", "json"] = "text"
    explain: bool = False
    strict_oracle: bool = False
    oracle: bool = True

    @model_validator(mode="after")
    def inputs_present(self) -> "RunConfig":
        model_mode = self.command == "emit" and self.clauses_path is None
        needs_model = self.command in ("check-wf", "simulate", "compile", "verify") or model_mode
        needs_property = self.command in ("compile", "verify") or model_mode
        needs_clauses = self.command in ("minimize", "solve")
        if needs_model and self.model_path is None:
            raise ValueError(f"{self.command} needs a model file")
        if needs_clauses and self.clauses_path is None:
            raise ValueError(f"{self.command} needs a clause file")
        if needs_property:
            given = [p for p in (self.property_path, self.response, self.schedulability)
                     if p is not None]
            if len(given) != 1:
                raise ValueError("give exactly one of a property file, --response or --deadline")
        return self
