"""Parse and validate run configuration files (flat `section.key = value` lines)."""

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Callable, Optional

from config import (
    DEFAULT_BETA,
    DEFAULT_C_FRACTION,
    DEFAULT_DELTA,
    DEFAULT_EPS_LIST,
    DEFAULT_MAX_ITER,
    DEFAULT_MU,
    DEFAULT_N_T,
    DEFAULT_N_U,
    DEFAULT_ORACLE_N_X,
    DEFAULT_TOL,
    DEFAULT_U_MAX,
    LATERAL_CLOSURES,
)
from src.errors import ParseError, ValidationError
from src.geometry import DIVISOR_POINTS, BackgroundGeometry, DivisorData, conical_c_max
from src.solver import BoundarySpec, Schedule
from src.weights import (
    ANALYTIC_SET,
    CUSTOM,
    DISTANCE_POWER,
    PRODUCT,
    SECTION_POWER,
    WEIGHT_KINDS,
    WeightSpec,
    constant_weight,
    product_weight,
    section_weight,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RunConfig:
    """Resolved run configuration. Runs are deterministic; there is no seed."""

    u_max: float = DEFAULT_U_MAX
    n_u: int = DEFAULT_N_U
    n_t: int = DEFAULT_N_T
    beta: float = DEFAULT_BETA
    beta_infinity: Optional[float] = None
    c: Optional[float] = None
    c_fraction: float = DEFAULT_C_FRACTION
    start_scale: float = 0.0
    end_scale: float = 1.0
    shift: float = 0.0
    bump: float = 0.0
    weight_kind: str = PRODUCT
    p: Optional[float] = None
    weight_point: str = "zero"
    weight_value: float = 1.0
    monomials: tuple[int, ...] = (1,)
    eps_list: tuple[float, ...] = DEFAULT_EPS_LIST
    eta_list: Optional[tuple[float, ...]] = None
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    lateral: str = LATERAL_CLOSURES[0]
    f_field: Optional[str] = None
    mu: float = DEFAULT_MU
    delta: float = DEFAULT_DELTA
    truncation: bool = False
    audit_grids: tuple[str, ...] = ()
    oracle_n_x: int = DEFAULT_ORACLE_N_X
    source: Optional[str] = field(default=None, compare=False)

    @property
    def weight_p(self) -> float:
        return self.beta if self.p is None else self.p

    def geometry(self) -> BackgroundGeometry:
        return BackgroundGeometry(u_max=self.u_max, n_u=self.n_u)

    def divisor(self, geo: Optional[BackgroundGeometry] = None) -> DivisorData:
        """Divisor data; c defaults to c_fraction·c_max on the grid (c_fraction alone when c_max is infinite)."""
        if self.c is not None:
            return DivisorData(self.beta, self.beta_infinity, self.c)
        unit = DivisorData(self.beta, self.beta_infinity, 0.0)
        c_max = conical_c_max(unit, geo or self.geometry())
        c = self.c_fraction * (1.0 if math.isinf(c_max) else c_max)
        return DivisorData(self.beta, self.beta_infinity, c)

    def weight(self) -> WeightSpec:
        p = self.weight_p
        if self.weight_kind == PRODUCT:
            return product_weight(p)
        if self.weight_kind == SECTION_POWER:
            return section_weight(self.weight_point, p)
        if self.weight_kind == ANALYTIC_SET:
            return WeightSpec(kind=ANALYTIC_SET, p=p, monomials=self.monomials)
        if self.weight_kind == DISTANCE_POWER:
            return WeightSpec(kind=DISTANCE_POWER, p=p)
        return constant_weight(self.weight_value, p)

    def schedule(self) -> Schedule:
        return Schedule.from_eps(
            list(self.eps_list),
            self.weight_p,
            eta_list=None if self.eta_list is None else list(self.eta_list),
        )

    def boundary(self) -> BoundarySpec:
        return BoundarySpec(self.start_scale, self.end_scale, self.shift, self.bump)

    def refined(self, levels: int) -> "RunConfig":
        """Halve both grid spacings `levels` times."""
        if levels <= 0:
            return self
        scale = 2**levels
        return replace(self, n_u=(self.n_u - 1) * scale + 1, n_t=(self.n_t - 1) * scale + 1)

    def extended(self, margin: float) -> "RunConfig":
        """Same spacing on a u range widened by margin on each side."""
        h = 2.0 * self.u_max / (self.n_u - 1)
        extra = int(round(margin / h))
        return replace(self, u_max=self.u_max + extra * h, n_u=self.n_u + 2 * extra)

    def to_dict(self) -> dict:
        """Resolved configuration for embedding in reports."""
        payload = asdict(self)
        payload["p"] = self.weight_p
        for key in ("eps_list", "eta_list", "monomials", "audit_grids"):
            if payload[key] is not None:
                payload[key] = list(payload[key])
        return payload


def _parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "yes", "1", "on"):
        return True
    if lowered in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"expected a boolean, got '{value}'")


def _parse_int(value: str) -> int:
    number = float(value)
    if not number.is_integer():
        raise ValueError(f"expected an integer, got '{value}'")
    return int(number)


def _float_list(value: str) -> tuple[float, ...]:
    items = [v for v in value.replace(";", ",").split(",") if v.strip()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(v) for v in items)


def _int_list(value: str) -> tuple[int, ...]:
    return tuple(_parse_int(v) for v in value.split(",") if v.strip())


def _str_list(value: str) -> tuple[str, ...]:
    return tuple(v.strip() for v in value.split(",") if v.strip())


KEYS: dict[str, tuple[str, Callable[[str], Any]]] = {
    "grid.u_max": ("u_max", float),
    "grid.n_u": ("n_u", _parse_int),
    "grid.n_t": ("n_t", _parse_int),
    "divisor.beta": ("beta", float),
    "divisor.beta_infinity": ("beta_infinity", float),
    "divisor.c": ("c", float),
    "divisor.c_fraction": ("c_fraction", float),
    "boundary.start_scale": ("start_scale", float),
    "boundary.end_scale": ("end_scale", float),
    "boundary.shift": ("shift", float),
    "boundary.bump": ("bump", float),
    "weight.kind": ("weight_kind", str.strip),
    "weight.p": ("p", float),
    "weight.point": ("weight_point", str.strip),
    "weight.value": ("weight_value", float),
    "weight.monomials": ("monomials", _int_list),
    "schedule.eps_list": ("eps_list", _float_list),
    "schedule.eps_start": ("eps_start", float),
    "schedule.eps_end": ("eps_end", float),
    "schedule.count": ("count", _parse_int),
    "schedule.eta_list": ("eta_list", _float_list),
    "solver.tol": ("tol", float),
    "solver.max_iter": ("max_iter", _parse_int),
    "solver.lateral": ("lateral", str.strip),
    "f_field": ("f_field", str.strip),
    "audit.mu": ("mu", float),
    "audit.delta": ("delta", float),
    "audit.truncation": ("truncation", _parse_bool),
    "audit.grids": ("audit_grids", _str_list),
    "oracle.n_x": ("oracle_n_x", _parse_int),
}


def parse_lines(text: str) -> dict[str, Any]:
    """
    Parse `key = value` lines into attribute values.

    Raises:
        ParseError: On a malformed line, an unknown or repeated key, or a bad value.
    """
    values: dict[str, Any] = {}
    seen: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in KEYS:
            raise ParseError(f"unknown key '{key}'", line=lineno, key=key)
        if key in seen:
            raise ParseError(f"key repeated (first on line {seen[key]})", line=lineno, key=key)
        if not value:
            raise ParseError("missing value", line=lineno, key=key)
        attr, parser = KEYS[key]
        try:
            values[attr] = parser(value)
        except ValueError as e:
            raise ParseError(f"bad value '{value}': {e}", line=lineno, key=key) from e
        seen[key] = lineno
    return values


def validate_grid(u_max: float, n_u: int, n_t: int) -> tuple[bool, str]:
    """
    Validate grid dimensions.

    Returns:
        (is_valid, error_message). error_message is empty when valid.
    """
    if not (math.isfinite(u_max) and u_max > 0):
        return False, "grid.u_max must be a positive number."
    for name, n in (("grid.n_u", n_u), ("grid.n_t", n_t)):
        if n < 9 or n % 2 == 0:
            return False, f"{name} must be odd and >= 9, got {n}."
    return True, ""


def validate_schedule(eps_list: tuple[float, ...], eta_list: Optional[tuple[float, ...]]) -> tuple[bool, str]:
    if not eps_list:
        return False, "schedule needs at least one eps."
    if any(not eps > 0 for eps in eps_list):
        return False, "schedule eps values must be positive."
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        return False, "schedule.eps_list must be strictly decreasing."
    if eta_list is not None:
        if len(eta_list) != len(eps_list):
            return False, "schedule.eta_list must have one value per eps."
        if any(not eta > 0 for eta in eta_list):
            return False, "schedule eta values must be positive."
    return True, ""


def validate_divisor(beta: float, beta_infinity: Optional[float], c: Optional[float], c_fraction: float) -> tuple[bool, str]:
    for name, b in (("divisor.beta", beta), ("divisor.beta_infinity", beta_infinity)):
        if b is not None and not 0.0 < b <= 1.0:
            return False, f"{name} must be in (0, 1], got {b}."
    if c is not None and c < 0:
        return False, "divisor.c must be >= 0."
    if not 0.0 <= c_fraction < 1.0:
        return False, "divisor.c_fraction must be in [0, 1)."
    return True, ""


def validate_weight(kind: str, p: float, point: str) -> tuple[bool, str]:
    if kind not in WEIGHT_KINDS:
        return False, f"weight.kind '{kind}' unknown. Choose from: {', '.join(WEIGHT_KINDS)}."
    if not p > 0:
        return False, "weight.p must be positive."
    if point not in DIVISOR_POINTS:
        return False, f"weight.point must be one of {', '.join(DIVISOR_POINTS)}."
    return True, ""


def validate_solver(tol: float, max_iter: int, lateral: str) -> tuple[bool, str]:
    if not tol > 0:
        return False, "solver.tol must be positive."
    if max_iter < 1:
        return False, "solver.max_iter must be >= 1."
    if lateral not in LATERAL_CLOSURES:
        return False, f"solver.lateral must be one of {', '.join(LATERAL_CLOSURES)}."
    return True, ""


def validate_audit(mu: float, delta: float, oracle_n_x: int) -> tuple[bool, str]:
    if not 0.0 <= mu < 1.0:
        return False, "audit.mu must be in [0, 1)."
    if not 0.0 < delta <= 1.0:
        return False, "audit.delta must be in (0, 1]."
    if oracle_n_x < 16:
        return False, "oracle.n_x must be >= 16."
    return True, ""


def _resolve_schedule(values: dict[str, Any]) -> None:
    geometric = [k for k in ("eps_start", "eps_end", "count") if k in values]
    if geometric and "eps_list" in values:
        raise ValidationError(["give either schedule.eps_list or schedule.eps_start/eps_end/count, not both"])
    if geometric:
        if len(geometric) != 3:
            raise ValidationError(["schedule.eps_start, schedule.eps_end and schedule.count go together"])
        start, end, count = values.pop("eps_start"), values.pop("eps_end"), values.pop("count")
        if count < 1 or not (start > 0 and end > 0):
            raise ValidationError(["geometric schedule needs positive eps bounds and count >= 1"])
        if count == 1:
            values["eps_list"] = (start,)
        else:
            ratio = (end / start) ** (1.0 / (count - 1))
            values["eps_list"] = tuple(start * ratio**i for i in range(count))


def get_validated_config(values: dict[str, Any], *, base_dir: Optional[Path] = None, source: Optional[str] = None) -> RunConfig:
    """
    Validate parsed values and return a RunConfig with defaults applied.

    Raises:
        ValidationError: Listing every violated invariant.
    """
    values = dict(values)
    _resolve_schedule(values)
    cfg = RunConfig(**values, source=source)

    violations = []
    for ok, msg in (
        validate_grid(cfg.u_max, cfg.n_u, cfg.n_t),
        validate_schedule(cfg.eps_list, cfg.eta_list),
        validate_divisor(cfg.beta, cfg.beta_infinity, cfg.c, cfg.c_fraction),
        validate_weight(cfg.weight_kind, cfg.weight_p, cfg.weight_point),
        validate_solver(cfg.tol, cfg.max_iter, cfg.lateral),
        validate_audit(cfg.mu, cfg.delta, cfg.oracle_n_x),
    ):
        if not ok:
            violations.append(msg)
    if cfg.weight_kind == CUSTOM and not cfg.weight_value > 0:
        violations.append("weight.value must be positive.")
    if violations:
        raise ValidationError(violations)

    if base_dir is not None:
        def resolve(p: str) -> str:
            return str(p if Path(p).is_absolute() else base_dir / p)

        cfg = replace(
            cfg,
            f_field=None if cfg.f_field is None else resolve(cfg.f_field),
            audit_grids=tuple(resolve(p) for p in cfg.audit_grids),
        )
    return cfg


def parse_config(path) -> RunConfig:
    """
    Read, parse and validate a run configuration file.

    Relative f_field and audit.grids paths resolve against the file's directory.

    Raises:
        FileNotFoundError: If path does not exist.
        ParseError: On malformed lines or unknown keys.
        ValidationError: On violated invariants.
    """
    path = Path(path)
    values = parse_lines(path.read_text(encoding="utf-8"))
    cfg = get_validated_config(values, base_dir=path.resolve().parent, source=str(path))
    logger.debug("parsed %s: %d keys", path, len(values))
    return cfg
