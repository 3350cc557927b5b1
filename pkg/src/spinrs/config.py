"""Run configuration: JSON schema, validation and canonical serialization."""

import json
from dataclasses import dataclass, field, replace

import jsonschema
import numpy as np

from .dynamics import IntegratorConfig, RSState
from .errors import InvariantError, SpinRSError
from .factorization import CONVENTIONS
from .hamiltonian import HamiltonianSpec
from .lie import HARD_TOL, SimpleSubset
from .rmatrix import RMatrixSpec

METHODS = ("rk45", "rk4", "factorization", "both")
BACKENDS = ("eigen", "transport")
MODES = ("hermitian", "complex")
HERMITIAN_TOL = 1e-12


class ConfigError(SpinRSError, ValueError):
    """Invalid run configuration."""


_number = {"type": "number"}
_vector = {"type": "array", "items": _number, "minItems": 2}
_matrix = {"type": "array", "items": _vector, "minItems": 2}
_term = {"type": "array", "items": _number, "minItems": 2, "maxItems": 3}

SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["n", "initial", "time"],
    "properties": {
        "n": {"type": "integer", "minimum": 1},
        "pi_prime": {"oneOf": [{"const": "full"},
                               {"type": "array", "items": {"type": "integer", "minimum": 1},
                                "uniqueItems": True}]},
        "kappa": {"type": "number", "exclusiveMinimum": 0},
        "hamiltonian": {
            "type": "object", "additionalProperties": False,
            "properties": {"power": {"type": "array", "items": _term},
                           "characters": {"type": "array", "items": _term}},
        },
        "initial": {
            "type": "object", "additionalProperties": False,
            "required": ["q", "g_re"],
            "properties": {"q": _vector, "q_im": _vector, "g_re": _matrix, "g_im": _matrix},
        },
        "time": {
            "type": "object", "additionalProperties": False,
            "required": ["t1", "samples"],
            "properties": {"t0": _number, "t1": _number,
                           "samples": {"type": "integer", "minimum": 2}},
        },
        "solver": {
            "type": "object", "additionalProperties": False,
            "properties": {
                "method": {"enum": list(METHODS)},
                "rtol": {"type": "number", "exclusiveMinimum": 0},
                "atol": {"type": "number", "exclusiveMinimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
                "backend": {"enum": list(BACKENDS)},
                "convention": {"enum": list(CONVENTIONS)},
            },
        },
        "mode": {"enum": list(MODES)},
        "seed": {"type": "integer"},
    },
}


@dataclass(frozen=True)
class TimeSpec:
    t0: float = 0.0
    t1: float = 1.0
    samples: int = 201

    def grid(self):
        return np.linspace(self.t0, self.t1, self.samples)


@dataclass(frozen=True)
class SolverSpec:
    method: str = "rk45"
    rtol: float = 1e-9
    atol: float = 1e-12
    step: float = 1e-3
    backend: str = "eigen"
    convention: str = "unit_diagonal"

    def integrator(self, method=None):
        return IntegratorConfig(method=method or self.method, rtol=self.rtol,
                                atol=self.atol, step=self.step)


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Everything needed to reproduce one run.

    ``q0`` and ``g0`` are stored exactly as given (so serialization round
    trips bit for bit); :attr:`state` projects them onto the zero-sum and
    unit-determinant constraints.
    """

    n: int
    q0: np.ndarray
    g0: np.ndarray
    time: TimeSpec = field(default_factory=TimeSpec)
    pi_prime: object = "full"
    kappa: float = 0.5
    hamiltonian: HamiltonianSpec = field(default_factory=HamiltonianSpec)
    solver: SolverSpec = field(default_factory=SolverSpec)
    mode: str = "hermitian"
    seed: int = 0

    def __post_init__(self):
        _validate(self)

    @property
    def subset(self):
        if self.pi_prime == "full":
            return SimpleSubset.full(self.n)
        return SimpleSubset(self.n, frozenset(self.pi_prime))

    @property
    def rmatrix(self):
        return RMatrixSpec(self.n, self.subset, self.kappa)

    @property
    def state(self):
        return RSState(self.q0, self.g0)

    def replace(self, **kwargs):
        return replace(self, **kwargs)

    # -- serialization ---------------------------------------------------

    def to_dict(self):
        q = np.asarray(self.q0)
        g = np.asarray(self.g0, dtype=complex)
        return {
            "n": self.n,
            "pi_prime": self.pi_prime if self.pi_prime == "full" else list(self.pi_prime),
            "kappa": float(self.kappa),
            "hamiltonian": self.hamiltonian.to_dict(),
            "initial": {"q": [float(x) for x in q.real],
                        "q_im": [float(x) for x in np.imag(q)],
                        "g_re": g.real.tolist(), "g_im": g.imag.tolist()},
            "time": {"t0": float(self.time.t0), "t1": float(self.time.t1),
                     "samples": int(self.time.samples)},
            "solver": {"method": self.solver.method, "rtol": float(self.solver.rtol),
                       "atol": float(self.solver.atol), "step": float(self.solver.step),
                       "backend": self.solver.backend,
                       "convention": self.solver.convention},
            "mode": self.mode,
            "seed": int(self.seed),
        }

    def dumps(self):
        return json.dumps(self.to_dict(), indent=2) + "\n"

    @classmethod
    def from_dict(cls, d):
        try:
            jsonschema.validate(d, SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        n = d["n"]
        init = d["initial"]
        m = n + 1
        q = np.array(init["q"], dtype=float)
        q_im = np.array(init.get("q_im", [0.0] * len(q)), dtype=float)
        g_re = np.array(init["g_re"], dtype=float)
        g_im = np.array(init.get("g_im", np.zeros_like(g_re)), dtype=float)
        if q.shape != (m,) or q_im.shape != (m,):
            raise ConfigError(f"initial q must have {m} entries")
        if g_re.shape != (m, m) or g_im.shape != (m, m):
            raise ConfigError(f"initial g must be {m}x{m}")
        q0 = q + 1j * q_im if np.any(q_im) else q
        try:
            ham = HamiltonianSpec.from_dict(d.get("hamiltonian", {"power": [[1, 1.0]]}))
        except ValueError as exc:
            raise ConfigError(f"hamiltonian: {exc}") from None
        pi = d.get("pi_prime", "full")
        pi = "full" if pi == "full" else tuple(sorted(pi))
        return cls(n=n, q0=q0, g0=g_re + 1j * g_im,
                   time=TimeSpec(**{**{"t0": 0.0}, **d["time"]}),
                   pi_prime=pi, kappa=float(d.get("kappa", 0.5)), hamiltonian=ham,
                   solver=SolverSpec(**d.get("solver", {})),
                   mode=d.get("mode", "hermitian"), seed=int(d.get("seed", 0)))

    @classmethod
    def loads(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.loads(fh.read())


def _validate(cfg):
    m = cfg.n + 1
    if cfg.pi_prime != "full":
        if any(not 1 <= k <= cfg.n for k in cfg.pi_prime):
            raise ConfigError(f"simple-root indices must lie in 1..{cfg.n}")
    if cfg.mode not in MODES:
        raise ConfigError(f"unknown mode {cfg.mode!r}")
    if cfg.solver.method not in METHODS:
        raise ConfigError(f"unknown solver method {cfg.solver.method!r}")
    if cfg.solver.method in ("factorization", "both") and cfg.pi_prime != "full" \
            and len(cfg.pi_prime) != cfg.n:
        raise ConfigError("the factorization solver requires pi_prime = full")
    if not cfg.time.t1 > cfg.time.t0:
        raise ConfigError("time.t1 must exceed time.t0")
    q = np.asarray(cfg.q0)
    g = np.asarray(cfg.g0, dtype=complex)
    if q.shape != (m,) or g.shape != (m, m):
        raise ConfigError(f"initial data must have size {m}")
    if abs(q.sum()) > HARD_TOL:
        raise ConfigError(f"initial q has sum {q.sum():.3g}; projection correction exceeds "
                          f"{HARD_TOL}")
    det = np.linalg.det(g)
    if abs(det - 1) > HARD_TOL:
        raise ConfigError(f"initial g has determinant {det:.6g}; projection correction "
                          f"exceeds {HARD_TOL}")
    if cfg.mode == "hermitian":
        scale = max(1.0, np.abs(g).max())
        if np.iscomplexobj(q) and np.abs(q.imag).max() > 0:
            raise ConfigError("hermitian mode needs real q")
        if np.abs(g - g.conj().T).max() > HERMITIAN_TOL * scale:
            raise ConfigError("hermitian mode needs a Hermitian g")
    for k, _ in cfg.hamiltonian.characters:
        if k > cfg.n:
            raise ConfigError(f"character chi_{k} undefined for n={cfg.n}")
    try:
        RSState(q, g)
    except InvariantError as exc:
        raise ConfigError(str(exc)) from None
