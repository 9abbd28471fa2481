"""
Run configuration: which problem to solve, how, and where to write the reports.

A single JSON document with a problem, solver and output block. Parsing is
strict: any unknown key, missing key or wrong type raises ConfigError naming
the dotted field.
"""
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional
import json
from pathlib import Path


MODES = ("real-grid", "real-exact", "complex")


class ConfigError(Exception):
    """Invalid run configuration; `field` is the dotted path of the offending entry."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def _check_keys(data: Any, path: str, allowed: set, required: set = frozenset()):
    if not isinstance(data, dict):
        raise ConfigError(path, "must be an object")
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(f"{path}.{unknown[0]}", "unknown field")
    missing = sorted(required - set(data))
    if missing:
        raise ConfigError(f"{path}.{missing[0]}", "required field is missing")


def _number(data: dict, key: str, path: str, default: Any = None, positive: bool = False,
            nonnegative: bool = False) -> Any:
    value = data.get(key, default)
    if value is None:
        return None
    if not _is_number(value):
        raise ConfigError(f"{path}.{key}", f"must be a number, got {value!r}")
    if positive and value <= 0:
        raise ConfigError(f"{path}.{key}", f"must be positive, got {value}")
    if nonnegative and value < 0:
        raise ConfigError(f"{path}.{key}", f"must be nonnegative, got {value}")
    return float(value)


def _integer(data: dict, key: str, path: str, default: int, minimum: int) -> int:
    value = data.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool):
        raise ConfigError(f"{path}.{key}", f"must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{path}.{key}", f"must be at least {minimum}, got {value}")
    return value


def _state_entry(value: Any, path: str) -> Any:
    """A real number or a [re, im] pair."""
    if _is_number(value):
        return float(value)
    if isinstance(value, list) and len(value) == 2 and all(_is_number(v) for v in value):
        return [float(v) for v in value]
    raise ConfigError(path, f"must be a number or a [re, im] pair, got {value!r}")


@dataclass
class ProblemConfig:
    """
    Either a registry entry name, or the explicit rectangle and right-hand side.

    For explicit problems rhs holds one expression per component; complex
    problems may give a polynomial `field` document instead. L and M are
    estimated on the rectangle when omitted (real problems only).
    """
    registry: Optional[str] = None
    t0: float = 0.0
    y0: List[Any] = field(default_factory=list)
    a: Optional[float] = None
    b: Optional[float] = None
    rhs: List[str] = field(default_factory=list)
    polynomial: Optional[Dict[str, Any]] = None  # "field" in JSON
    L: Optional[float] = None
    M: Optional[float] = None
    name: str = ""

    @property
    def is_registry(self) -> bool:
        return self.registry is not None

    @property
    def dimension(self) -> int:
        return len(self.y0)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        if self.is_registry:
            return {'registry': self.registry}
        data = {
            't0': self.t0,
            'y0': list(self.y0),
            'a': self.a,
            'b': self.b
        }
        if self.rhs:
            data['rhs'] = list(self.rhs)
        if self.polynomial is not None:
            data['field'] = self.polynomial
        for key in ('L', 'M'):
            if getattr(self, key) is not None:
                data[key] = getattr(self, key)
        if self.name:
            data['name'] = self.name
        return data

    @classmethod
    def from_dict(cls, data: dict, path: str = "problem") -> 'ProblemConfig':
        """Create from dictionary."""
        if isinstance(data, dict) and 'registry' in data:
            _check_keys(data, path, {'registry'}, {'registry'})
            if not isinstance(data['registry'], str) or not data['registry']:
                raise ConfigError(f"{path}.registry", "must be a registry entry name")
            return cls(registry=data['registry'])

        _check_keys(data, path, {'t0', 'y0', 'a', 'b', 'rhs', 'field', 'L', 'M', 'name'},
                    {'y0', 'a', 'b'})
        y0 = data['y0']
        if _is_number(y0):
            y0 = [y0]
        if not isinstance(y0, list) or not y0:
            raise ConfigError(f"{path}.y0", "must be a nonempty list")
        y0 = [_state_entry(v, f"{path}.y0[{k}]") for k, v in enumerate(y0)]

        rhs = data.get('rhs', [])
        if isinstance(rhs, str):
            rhs = [rhs]
        if not isinstance(rhs, list) or not all(isinstance(s, str) and s.strip() for s in rhs):
            raise ConfigError(f"{path}.rhs", "must be a list of nonempty expressions")
        poly_field = data.get('field')
        if poly_field is not None and not isinstance(poly_field, dict):
            raise ConfigError(f"{path}.field", "must be an object")
        if not rhs and poly_field is None:
            raise ConfigError(f"{path}.rhs", "required field is missing")
        if rhs and len(rhs) != len(y0):
            raise ConfigError(f"{path}.rhs", f"has {len(rhs)} components but y0 has {len(y0)}")

        name = data.get('name', "")
        if not isinstance(name, str):
            raise ConfigError(f"{path}.name", "must be a string")

        return cls(
            t0=_number(data, 't0', path, default=0.0),
            y0=y0,
            a=_number(data, 'a', path, positive=True),
            b=_number(data, 'b', path, positive=True),
            rhs=list(rhs),
            polynomial=poly_field,
            L=_number(data, 'L', path, nonnegative=True),
            M=_number(data, 'M', path, nonnegative=True),
            name=name
        )


@dataclass
class SolverConfig:
    """
    Iteration and discretisation settings.

    kappa_scale multiplies every contraction factor of the Picard chain;
    values below 1 understate the chain bound and are used to exercise the
    bound-violation exit path.
    """
    n_max: int = 8
    N: int = 1024
    K_max: int = 64
    tol: float = 1e-3
    compare_rates: bool = False
    euler_levels: int = 7
    kappa_scale: float = 1.0

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'n_max': self.n_max,
            'N': self.N,
            'K_max': self.K_max,
            'tol': self.tol,
            'compare_rates': self.compare_rates,
            'euler_levels': self.euler_levels,
            'kappa_scale': self.kappa_scale
        }

    @classmethod
    def from_dict(cls, data: dict, path: str = "solver") -> 'SolverConfig':
        """Create from dictionary."""
        _check_keys(data, path, set(cls().to_dict()))
        compare = data.get('compare_rates', False)
        if not isinstance(compare, bool):
            raise ConfigError(f"{path}.compare_rates", "must be true or false")
        return cls(
            n_max=_integer(data, 'n_max', path, 8, 0),
            N=_integer(data, 'N', path, 1024, 2),
            K_max=_integer(data, 'K_max', path, 64, 1),
            tol=_number(data, 'tol', path, default=1e-3, positive=True),
            compare_rates=compare,
            euler_levels=_integer(data, 'euler_levels', path, 7, 2),
            kappa_scale=_number(data, 'kappa_scale', path, default=1.0, positive=True)
        )


@dataclass
class OutputConfig:
    """Report destinations; any of them may be omitted."""
    csv: Optional[str] = None
    json: Optional[str] = None
    excel: Optional[str] = None

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {key: value for key, value in
                (('csv', self.csv), ('json', self.json), ('excel', self.excel)) if value is not None}

    @classmethod
    def from_dict(cls, data: dict, path: str = "output") -> 'OutputConfig':
        """Create from dictionary."""
        _check_keys(data, path, {'csv', 'json', 'excel'})
        for key, value in data.items():
            if value is not None and not isinstance(value, str):
                raise ConfigError(f"{path}.{key}", "must be a file path")
        return cls(csv=data.get('csv'), json=data.get('json'), excel=data.get('excel'))


@dataclass
class RunConfig:
    """
    Complete run configuration.

    Sections:
    1. mode: real-grid, real-exact or complex
    2. problem: registry entry or explicit problem
    3. solver: iteration counts, grid size, truncation degree, tolerances
    4. output: report paths
    """
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    mode: str = "real-exact"
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self):
        """
        Re-check the fields that command-line overrides may change.

        Raises:
            ConfigError: naming the offending field
        """
        if self.mode not in MODES:
            raise ConfigError("mode", f"must be one of {', '.join(MODES)}, got {self.mode!r}")
        if not isinstance(self.solver.n_max, int) or self.solver.n_max < 0:
            raise ConfigError("solver.n_max", f"must be a nonnegative integer, got {self.solver.n_max!r}")
        problem = self.problem
        if problem.is_registry:
            return
        if self.mode == "complex":
            for key in ('L', 'M'):
                if getattr(problem, key) is None:
                    raise ConfigError(f"problem.{key}", "is required in complex mode")
        else:
            if problem.polynomial is not None:
                raise ConfigError("problem.field", "only complex mode takes a polynomial field")
            if any(isinstance(v, list) for v in problem.y0):
                raise ConfigError("problem.y0", "complex entries need complex mode")

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            'mode': self.mode,
            'problem': self.problem.to_dict(),
            'solver': self.solver.to_dict(),
            'output': self.output.to_dict()
        }

    @classmethod
    def from_dict(cls, data: dict) -> 'RunConfig':
        """
        Create from dictionary.

        Raises:
            ConfigError: on the first invalid field
        """
        _check_keys(data, "config", {'mode', 'problem', 'solver', 'output'}, {'problem'})
        mode = data.get('mode', "real-exact")
        if not isinstance(mode, str):
            raise ConfigError("mode", "must be a string")
        config = cls(
            problem=ProblemConfig.from_dict(data['problem']),
            mode=mode,
            solver=SolverConfig.from_dict(data.get('solver', {})),
            output=OutputConfig.from_dict(data.get('output', {}))
        )
        config.validate()
        return config

    def save_to_file(self, file_path: Path):
        """Save configuration to JSON file."""
        with open(file_path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2, ensure_ascii=False)

    @classmethod
    def load_from_file(cls, file_path: Path) -> 'RunConfig':
        """
        Load configuration from JSON file.

        Raises:
            ConfigError: if the file is missing, not JSON, or invalid
        """
        file_path = Path(file_path)
        if not file_path.exists():
            raise ConfigError("config", f"file not found: {file_path}")
        with open(file_path, 'r', encoding='utf-8') as f:
            try:
                data = json.load(f)
            except json.JSONDecodeError as e:
                raise ConfigError("config", f"invalid JSON at line {e.lineno}: {e.msg}") from e
        return cls.from_dict(data)
