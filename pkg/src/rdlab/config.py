"""YAML experiment configs, validated against the shipped JSON schema.

Validation errors carry the offending field path and, when the config came
from text, its line number.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path

import jsonschema
import yaml

COMMANDS = ("bounds", "mi", "rd", "simulate", "noise", "report")

_FAMILY_PARAMS = {
    "Interval1D": (),
    "HalfSpaceAngle2D": (),
    "HalfSpaceUnitSphere": ("d",),
    "GaussianLocation": ("sigma", "tau"),
}


class _Loader(yaml.SafeLoader):
    """SafeLoader that also reads ``1e-8`` style exponents as floats."""


_Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
                  |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
                  |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
                  |[-+]?\.(?:inf|Inf|INF)
                  |\.(?:nan|NaN|NAN))$""", re.X),
    list("-+0123456789."))


class ConfigError(ValueError):
    """Invalid configuration; ``diagnostics`` lists ``field: message (line N)`` strings."""

    def __init__(self, diagnostics: list[str]):
        super().__init__("; ".join(diagnostics))
        self.diagnostics = diagnostics


def load_schema() -> dict:
    text = resources.files("rdlab").joinpath("config_schema.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class Budgets:
    trials: int = 4000
    outer_mc: int = 2000
    inner_mc: int = 10_000
    ba_slopes: tuple[float, ...] = (-1.0, -2.0, -4.0, -8.0, -16.0, -32.0, -64.0, -128.0,
                                    -256.0)
    max_iter: int = 100_000
    tol: float = 1e-8
    grid: int = 256


@dataclass(frozen=True)
class NoiseConfig:
    rho: float = 0.0
    train_noisy: bool = False
    test_noisy: bool = False
    mc_check: int = 0
    estimator: str = "two_term"


@dataclass(frozen=True)
class Checks:
    n_sigma: float = 3.0
    slope_range: tuple[float, float] | None = None


@dataclass(frozen=True)
class ExperimentConfig:
    command: str
    families: tuple[dict, ...] = ()
    n_list: tuple[int, ...] = (16, 64, 256, 1024)
    budgets: Budgets = field(default_factory=Budgets)
    learner: str = "PosteriorSample"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    checks: Checks = field(default_factory=Checks)
    master_seed: int = 0
    output_dir: str = "out"
    inputs: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = asdict(self)
        if self.families:
            d["families"] = [dict(f) for f in self.families]
        else:
            del d["families"]
        d["n_list"] = list(self.n_list)
        d["budgets"]["ba_slopes"] = list(self.budgets.ba_slopes)
        d["inputs"] = list(self.inputs)
        sr = self.checks.slope_range
        d["checks"]["slope_range"] = None if sr is None else list(sr)
        return d

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=True)

    def content_dict(self) -> dict:
        """Everything that can change output bytes; ``output_dir`` is left out."""
        d = self.to_dict()
        del d["output_dir"]
        return d

    def canonical_json(self) -> str:
        return json.dumps(self.content_dict(), sort_keys=True, separators=(",", ":"))

    def sha256(self) -> str:
        return hashlib.sha256(self.canonical_json().encode()).hexdigest()

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return from_dict(d)


# ---------------------------------------------------------------------------
# line lookup


def _node_line(root, path) -> int | None:
    node, line = root, None
    if node is not None:
        line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                if k.value == key:
                    node, line = v, k.start_mark.line + 1
                    break
            else:
                return line
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
            line = node.start_mark.line + 1
        else:
            return line
    return line


def _fmt(path, msg, root) -> str:
    where = ".".join(str(p) for p in path) or "<root>"
    line = _node_line(root, path) if root is not None else None
    return f"{where}: {msg}" + (f" (line {line})" if line else "")


# ---------------------------------------------------------------------------
# parsing


def _normalize_family(spec: dict) -> dict:
    kind = spec["kind"]
    out = {"kind": kind}
    for p in _FAMILY_PARAMS[kind]:
        if p == "d":
            out[p] = int(spec.get(p, 3))
        else:
            out[p] = float(spec.get(p, 1.0))
    return out


def _semantic_errors(data: dict, command: str | None) -> list[tuple[list, str]]:
    errs = []
    if command is not None and data.get("command") not in (None, command):
        errs.append((["command"], f"config is for '{data['command']}', not '{command}'"))
    if "family" in data and "families" in data:
        errs.append((["family"], "give either 'family' or 'families', not both"))
    fams = data.get("families") or ([data["family"]] if "family" in data else [])
    base = ["families"] if "families" in data else ["family"]
    for i, f in enumerate(fams):
        extra = set(f) - {"kind"} - set(_FAMILY_PARAMS[f["kind"]])
        if extra:
            path = base + [i] if "families" in data else base
            errs.append((path, f"{f['kind']} takes no parameter(s) {sorted(extra)}"))
    n_list = data.get("n_list")
    if n_list is not None and any(b <= a for a, b in zip(n_list, n_list[1:])):
        errs.append((["n_list"], "must be strictly increasing"))
    cmd = command or data.get("command")
    if cmd and cmd != "report" and not fams:
        errs.append(([], f"'{cmd}' needs a 'family' or 'families' entry"))
    if cmd == "report" and not data.get("inputs"):
        errs.append(([], "'report' needs a non-empty 'inputs' list"))
    sr = (data.get("checks") or {}).get("slope_range")
    if sr is not None and not sr[0] <= sr[1]:
        errs.append((["checks", "slope_range"], "lower end exceeds upper end"))
    return errs


def from_dict(data: dict, command: str | None = None, _root=None) -> ExperimentConfig:
    """Validate a mapping and build the config. ``command`` fills a missing ``command`` key."""
    if not isinstance(data, dict):
        raise ConfigError([_fmt([], "top level must be a mapping", _root)])
    validator = jsonschema.Draft202012Validator(load_schema())
    errors = sorted(validator.iter_errors(data), key=lambda e: list(map(str, e.absolute_path)))
    diags = [_fmt(list(e.absolute_path), e.message, _root) for e in errors]
    if not diags:
        diags = [_fmt(p, m, _root) for p, m in _semantic_errors(data, command)]
    if diags:
        raise ConfigError(diags)
    cmd = data.get("command", command)
    if cmd is None:
        raise ConfigError([_fmt(["command"], "no command given", _root)])
    fams = data.get("families") or ([data["family"]] if "family" in data else [])
    budgets = dict(data.get("budgets") or {})
    if "ba_slopes" in budgets:
        budgets["ba_slopes"] = tuple(float(s) for s in budgets["ba_slopes"])
    for k in ("tol",):
        if k in budgets:
            budgets[k] = float(budgets[k])
    noise = dict(data.get("noise") or {})
    if "rho" in noise:
        noise["rho"] = float(noise["rho"])
    checks = dict(data.get("checks") or {})
    if checks.get("slope_range") is not None:
        checks["slope_range"] = tuple(float(v) for v in checks["slope_range"])
    if "n_sigma" in checks:
        checks["n_sigma"] = float(checks["n_sigma"])
    kwargs = {}
    if "n_list" in data:
        kwargs["n_list"] = tuple(int(n) for n in data["n_list"])
    for key in ("learner", "output_dir"):
        if key in data:
            kwargs[key] = data[key]
    if "master_seed" in data:
        kwargs["master_seed"] = int(data["master_seed"])
    return ExperimentConfig(
        command=cmd,
        families=tuple(_normalize_family(f) for f in fams),
        budgets=Budgets(**budgets),
        noise=NoiseConfig(**noise),
        checks=Checks(**checks),
        inputs=tuple(data.get("inputs") or ()),
        **kwargs,
    )


def loads(text: str, command: str | None = None) -> ExperimentConfig:
    try:
        root = yaml.compose(text, Loader=_Loader)
        data = yaml.load(text, Loader=_Loader)
    except yaml.YAMLError as e:
        mark = getattr(e, "problem_mark", None)
        where = f" (line {mark.line + 1})" if mark else ""
        raise ConfigError([f"<yaml>: {getattr(e, 'problem', None) or e}{where}"]) from None
    if data is None:
        data = {}
    return from_dict(data, command, _root=root)


def load(path: str | Path, command: str | None = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise ConfigError([f"<file>: cannot read {path}: {e.strerror}"]) from None
    return loads(text, command)
