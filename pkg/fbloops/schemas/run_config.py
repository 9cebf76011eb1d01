"""Resolved run configuration of one CLI invocation."""

import json
from pathlib import Path
from typing import Any, Literal, Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from fbloops.core.exceptions import ConfigError
from fbloops.models.estimates import CouplingWeights
from fbloops.models.kernel import KernelSpec

Subcommand = Literal["sample", "loctime", "moments", "star", "edwards", "verify"]

# Fields each subcommand needs before any computation starts.
REQUIRED: dict[str, tuple[tuple[str, ...], ...]] = {
    "sample": (("H",), ("N",), ("n",), ("out",)),
    "loctime": (("input",), ("eps", "eps_ladder")),
    "moments": (("H",), ("eps",)),
    "star": (("input",), ("eps",)),
    "edwards": (("input",), ("eps",), ("g", "g_values", "g_self")),
    "verify": (("experiment",),),
}


class RunConfig(BaseModel):
    """Everything a subcommand needs; echoed into every artifact it writes."""

    model_config = ConfigDict(extra="forbid")

    subcommand: Subcommand

    # Kernel
    geometry: Literal["circle", "star"] = "circle"
    T: Optional[float] = Field(default=None, gt=0.0)
    lengths: Optional[list[float]] = None
    H: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    d: Optional[int] = Field(default=None, ge=1)

    # Grid and sampling
    N: Optional[int] = Field(
        default=None, ge=1, description="Loop points, or points per branch"
    )
    n: Optional[int] = Field(default=None, ge=0)
    method: Literal["auto", "circulant", "dense"] = "auto"
    seed: int = Field(default=0, ge=0, lt=2**64)

    # Local times
    eps: Optional[float] = Field(default=None, gt=0.0)
    eps_ladder: Optional[list[float]] = None
    delta: Optional[float] = Field(default=None, gt=0.0)
    region: Literal["full", "lambda", "gamma"] = "full"
    center: bool = False
    centering: Literal["grid", "quadrature"] = "grid"
    branch: Optional[int] = Field(default=None, ge=0)
    other_branch: Optional[int] = Field(default=None, ge=0)

    # Edwards reweighting
    g: Optional[float] = Field(default=None, ge=0.0)
    g_values: Optional[list[float]] = None
    g_self: Optional[list[float]] = None
    g_cross: Optional[float] = Field(default=None, ge=0.0)
    observables: list[str] = Field(default_factory=lambda: ["radius_of_gyration_sq"])
    scan: bool = False

    # Verification
    experiment: Optional[str] = None
    H_list: Optional[list[float]] = None

    # I/O
    input: Optional[str] = None
    out: Optional[str] = None
    per_path: Optional[str] = None
    format: Literal["json", "csv", "binary"] = "json"
    threads: Optional[int] = Field(default=None, ge=1)

    @model_validator(mode="after")
    def _check_required(self) -> "RunConfig":
        missing = [
            "/".join(options)
            for options in REQUIRED[self.subcommand]
            if all(getattr(self, name) is None for name in options)
        ]
        if missing:
            raise ValueError(f"{self.subcommand} requires: {', '.join(missing)}")
        if self.geometry == "star" and self.subcommand == "sample" and not self.lengths:
            raise ValueError("star geometry requires lengths")
        if self.region != "full" and self.delta is None:
            raise ValueError(f"region {self.region!r} requires delta")
        return self

    def kernel_spec(self) -> KernelSpec:
        """KernelSpec described by the geometry, H and d fields."""
        if self.H is None:
            raise ConfigError("H is required to build a kernel")
        if self.geometry == "star":
            geometry: dict[str, Any] = {
                "type": "star",
                "lengths": tuple(self.lengths or ()),
            }
        else:
            geometry = {"type": "circle", "T": self.T or 1.0}
        return KernelSpec(geometry=geometry, hurst=self.H, dim=self.d or 1)

    def coupling_weights(self, n_branches: int) -> CouplingWeights:
        """Starburst couplings: ``g_self`` per branch or shared, one ``g_cross``."""
        g_self = self.g_self or [self.g or 0.0]
        if len(g_self) == 1:
            g_self = g_self * n_branches
        if len(g_self) != n_branches:
            raise ConfigError(
                f"g_self has {len(g_self)} entries for {n_branches} branches",
                details={"g_self": g_self},
            )
        return CouplingWeights.shared_cross(g_self, self.g_cross or 0.0)

    @classmethod
    def resolve(
        cls,
        subcommand: str,
        flags: Mapping[str, Any],
        config_file: Optional[str] = None,
    ) -> "RunConfig":
        """
        Merge a JSON config file with command-line flags; flags win.

        Flags left at ``None`` do not override file values.

        Raises:
            ConfigError: If the file is unreadable or the merged config is invalid
        """
        values: dict[str, Any] = {}
        if config_file:
            try:
                values.update(json.loads(Path(config_file).read_text(encoding="utf-8")))
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(
                    f"cannot read config file {config_file}: {exc}"
                ) from exc
        values.update({key: value for key, value in flags.items() if value is not None})
        values["subcommand"] = subcommand
        try:
            return cls.model_validate(values)
        except ValidationError as exc:
            raise ConfigError(
                f"invalid {subcommand} configuration",
                details={
                    "errors": exc.errors(include_url=False, include_context=False)
                },
            ) from exc
