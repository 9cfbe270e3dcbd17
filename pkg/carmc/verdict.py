from typing import Dict, List, Optional, Tuple, TypedDict
from pydantic import BaseModel
from aenum import MultiValueEnum

from carmc.config import DirectionEnum, UnknownReasonEnum, VerdictEnum


class IterationStats(TypedDict):
    direction: str
    iteration: int
    frames: int
    clauses_per_frame: str
    f_inf: int
    cubes_per_layer: str
    sat_calls: int
    muc_calls: int
    pa_calls: int
    dead_cubes: int


class Trace(BaseModel):
    """Concrete counterexample: one input vector per time step, the last one makes bad true."""

    states: List[Tuple[int, ...]]
    inputs: List[Tuple[int, ...]]

    def __len__(self):
        return len(self.states)


class Certificate(BaseModel):
    """Frames F_0..F_j over named variables (``l<k>``, ``i<k>``, ``b``, negated with ``-``)."""

    direction: DirectionEnum
    index: int
    num_latches: int
    num_inputs: int
    frames: List[List[Tuple[str, ...]]]
    f_inf: List[Tuple[str, ...]] = []

    class Config:
        json_encoders = {
            MultiValueEnum: lambda v: v.value,
        }


class Verdict(BaseModel):
    kind: VerdictEnum
    certificate: Optional[Certificate] = None
    trace: Optional[Trace] = None
    reason: Optional[UnknownReasonEnum] = None
    direction: Optional[DirectionEnum] = None
    frames: int = 0
    stats: Dict[str, int] = {}

    @classmethod
    def safe(cls, certificate: Optional[Certificate] = None, **kwargs):
        return cls(kind=VerdictEnum.safe, certificate=certificate, **kwargs)

    @classmethod
    def unsafe(cls, trace: Trace, **kwargs):
        return cls(kind=VerdictEnum.unsafe, trace=trace, **kwargs)

    @classmethod
    def unknown(cls, reason: UnknownReasonEnum, **kwargs):
        return cls(kind=VerdictEnum.unknown, reason=reason, **kwargs)

    @property
    def conclusive(self) -> bool:
        return self.kind != VerdictEnum.unknown

    def __str__(self):
        text = self.kind.values[1]
        if self.kind == VerdictEnum.unsafe:
            text += f" (trace of {len(self.trace)} states)"
        elif self.kind == VerdictEnum.safe and self.certificate is not None:
            text += f" (invariant at frame {self.certificate.index})"
        elif self.reason is not None:
            text += f" ({self.reason.values[1]})"
        return text
