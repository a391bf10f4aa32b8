"""Problem descriptions and deterministic instance generation.

Draw order from one xorshift64* stream seeded with ``seed``:

* free: A (m x n complex).
* kronecker: sigma* (k values), C (n x R real), E (n^2 x n real);
  A = B(sigma*) C^T + noise * E.
* exponential: sigma* (k values, scaled by pi), C (n x L complex),
  E (K x n complex); A = B(sigma*) C^H + noise * E.

E is always drawn, so ``noise`` does not shift the stream.  Solver starts use
a second stream seeded with ``seed ^ START_SALT`` and are uniform in [-1, 1]
(phases of the exponential model included).
"""
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .matfile import read_matrix
from .rng import MASK, XorShift64Star
from .structure import make_model

START_SALT = 0xD1B54A32D192ED03


@dataclass
class ProblemSpec:
    model: str = "free"
    m: int | None = None
    n: int | None = None
    r: int | None = None
    base_n: int | None = None
    R: int | None = None
    K: int | None = None
    L: int | None = None
    seed: int = 0
    noise: float = 0.0
    a_path: str | None = None

    def __post_init__(self):
        self.model = self.model.lower()
        if self.noise < 0:
            raise ValueError("noise must be nonnegative")
        if not 0 <= int(self.seed) <= MASK:
            raise ValueError("seed must be an unsigned 64-bit integer")
        need = {"free": ("m", "n", "r"), "kronecker": ("base_n", "R"), "exponential": ("K", "L")}
        if self.model not in need:
            raise ValueError(f"unknown model {self.model!r}")
        for name in need[self.model]:
            v = getattr(self, name)
            if v is None or v <= 0:
                raise ValueError(f"{self.model} model needs a positive {name}")
        if self.model == "kronecker" and self.n is None:
            self.n = self.base_n
        if self.model == "exponential" and self.n is None:
            self.n = self.L
        if self.n is None or self.n <= 0:
            raise ValueError("n (columns of A) must be positive")

    def make_model(self):
        if self.model == "free":
            return make_model("free", m=self.m, r=self.r)
        if self.model == "kronecker":
            return make_model("kronecker", n=self.base_n, R=self.R)
        return make_model("exponential", K=self.K, L=self.L)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


@dataclass
class Instance:
    spec: ProblemSpec
    a: np.ndarray
    sigma_star: np.ndarray | None = None
    c_star: np.ndarray | None = None


def generate(spec):
    """Build the instance a spec describes (or load A from ``a_path``)."""
    model = spec.make_model()
    if spec.a_path is not None:
        a = read_matrix(spec.a_path)
        if a.shape != (model.m, spec.n):
            raise ValueError(f"A in {spec.a_path} is {a.shape}, spec wants {(model.m, spec.n)}")
        return Instance(spec, a)
    rng = XorShift64Star(spec.seed)
    if spec.model == "free":
        return Instance(spec, rng.complex_matrix(spec.m, spec.n))
    if spec.model == "kronecker":
        sigma = rng.uniform_array(model.k)
        c = rng.real_matrix(spec.n, model.r)
        e = rng.real_matrix(model.m, spec.n)
        a = model.build(sigma).real @ c.T + spec.noise * e
        return Instance(spec, a, sigma, c)
    sigma = np.pi * rng.uniform_array(model.k)
    c = rng.complex_matrix(spec.n, model.r)
    e = rng.complex_matrix(model.m, spec.n)
    a = model.build(sigma) @ c.conj().T + spec.noise * e
    return Instance(spec, a, sigma, c)


def start_point(spec, model=None):
    model = model or spec.make_model()
    return XorShift64Star(int(spec.seed) ^ START_SALT).uniform_array(model.k)


def load_spec(path):
    return ProblemSpec.from_json(Path(path).read_text())


def conditioned_factor(m, r, cond, seed=0):
    """m x r complex B = U diag(s) V^H with singular values spaced
    geometrically from 1 down to 1/cond and seeded random U, V."""
    if not 0 < r <= m:
        raise ValueError("need 0 < r <= m")
    if cond < 1:
        raise ValueError("cond must be >= 1")
    rng = XorShift64Star(seed)
    u = np.linalg.qr(rng.complex_matrix(m, r))[0]
    v = np.linalg.qr(rng.complex_matrix(r, r))[0]
    s = np.logspace(0.0, -np.log10(cond), r)
    return (u * s) @ v.conj().T
