import hashlib
import json
from dataclasses import asdict, dataclass, field
from enum import IntEnum, unique
from typing import Dict, Optional, Tuple

from ..lib.errors import UsageError


class _Named(IntEnum):
    def __str__(self):
        return self.name.lower()

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls[str(value).strip().upper()]
        except KeyError:
            choices = ", ".join(str(m) for m in cls)
            raise UsageError(
                f"unknown {cls.__name__} '{value}', expected one of {choices}"
            ) from None


@unique
class ProblemKind(_Named):

    HERTZ, IRONING, IRONING2P, ROPE = range(4)


@unique
class Stage(_Named):

    OFFLINE, ONLINE, FULL, CHLS, TAU = range(5)


@dataclass(eq=False)
class RunConfig:
    problem: ProblemKind = ProblemKind.HERTZ
    stage: Stage = Stage.FULL
    # "<scheme>:<size>" or explicit points
    design: object = "uniform:12"
    # None picks the held-out set that matches the training design
    validation: object = None
    delta: float = 1e-6
    # None means tau = delta
    tau: Optional[float] = None
    k_max: int = 50
    conv_tol: float = 1e-5
    hf_tol: float = 1e-8
    seed: int = 0
    output_dir: str = "results"
    # None means <output_dir>/model
    model_path: Optional[str] = None
    workers: int = 1
    warm_pairing: bool = False
    delta_B: float = 1e-7
    sketch_size: Optional[int] = None
    # parameter point of the tau stage; None uses the problem default
    tau_query: Optional[Tuple[float, ...]] = None
    # keyword options for the problem builder (mesh sizes)
    mesh: Dict[str, object] = field(default_factory=dict)
    thresholds: Dict[str, Dict[str, float]] = field(default_factory=dict)

    def __post_init__(self):
        self.problem = ProblemKind.parse(self.problem)
        self.stage = Stage.parse(self.stage)
        if not 0.0 < self.delta < 1.0:
            raise UsageError(f"delta must lie in (0, 1), got {self.delta}")
        if not 0.0 < self.delta_B < 1.0:
            raise UsageError(f"delta_B must lie in (0, 1), got {self.delta_B}")
        if self.tau is not None and self.tau < 0.0:
            raise UsageError(f"tau must be nonnegative, got {self.tau}")
        if int(self.k_max) < 1:
            raise UsageError(f"k_max must be at least 1, got {self.k_max}")
        if int(self.workers) < 1:
            raise UsageError(f"workers must be at least 1, got {self.workers}")
        for name in ("conv_tol", "hf_tol"):
            if not getattr(self, name) > 0.0:
                raise UsageError(f"{name} must be positive")
        self.k_max = int(self.k_max)
        self.workers = int(self.workers)
        if self.tau_query is not None:
            self.tau_query = tuple(float(v) for v in self.tau_query)
        for metric, bounds in self.thresholds.items():
            if not isinstance(bounds, dict) or set(bounds) - {"min", "max"}:
                raise UsageError(
                    f"threshold '{metric}' needs a table with 'min'/'max'"
                )

    @property
    def model_dir(self):
        return self.model_path or f"{self.output_dir}/model"

    def to_dict(self):
        data = asdict(self)
        data["problem"] = str(self.problem)
        data["stage"] = str(self.stage)
        return data

    def digest(self):
        """SHA-256 of the settings that shape the results."""
        data = self.to_dict()
        # worker count and output location do not change the numbers
        for key in ("workers", "output_dir", "model_path"):
            data.pop(key)
        text = json.dumps(data, sort_keys=True, default=str)
        return hashlib.sha256(text.encode("utf-8")).hexdigest()
