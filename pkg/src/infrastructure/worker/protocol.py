from typing import Dict, Literal, Optional
import math

from pydantic import BaseModel, ConfigDict, Field, StrictInt, StrictStr, ValidationError, field_validator, model_validator

from ...domain.errors import ProtocolError

PROTOCOL = "seedtune/1"


class WireModel(BaseModel):
    model_config = ConfigDict(extra="forbid", strict=True)


class Handshake(WireModel):
    protocol: Literal["seedtune/1"]


class TrialRequest(WireModel):
    id: StrictInt
    config: Dict[str, float]
    seed: StrictInt
    budget: float = Field(gt=0.0, le=1.0)


class TrialReply(WireModel):
    id: StrictInt
    value: Optional[float] = None
    error: Optional[StrictStr] = None

    @field_validator("value")
    @classmethod
    def finite_value(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and not math.isfinite(value):
            raise ValueError("value must be a finite number")
        return value

    @model_validator(mode="after")
    def exactly_one_outcome(self) -> 'TrialReply':
        if (self.value is None) == (self.error is None):
            raise ValueError("reply must carry exactly one of 'value' or 'error'")
        return self


def encode_request(request: TrialRequest) -> bytes:
    return (request.model_dump_json() + "\n").encode("utf-8")


def _describe(exc: ValidationError) -> str:
    first = exc.errors()[0]
    where = ".".join(str(part) for part in first.get("loc", ())) or "line"
    return f"{where}: {first.get('msg', 'invalid')}"


def parse_handshake(line: bytes) -> Handshake:
    try:
        return Handshake.model_validate_json(line.strip())
    except ValidationError as e:
        raise ProtocolError(f"bad handshake {line[:200]!r} ({_describe(e)})")


def parse_reply(line: bytes, expected_id: int) -> TrialReply:
    """Parse one reply line; a mismatched id is a protocol violation."""
    try:
        reply = TrialReply.model_validate_json(line.strip())
    except ValidationError as e:
        raise ProtocolError(f"malformed reply {line[:200]!r} ({_describe(e)})")
    if reply.id != expected_id:
        raise ProtocolError(f"reply id {reply.id} does not match request id {expected_id}")
    return reply
