"""Measurement model: signals, sampling ensembles, noise synthesis, instance I/O.

A signal is a plain 1-D numpy array; its dtype carries the scalar field
(float64 for the real field, complex128 for the complex field).  The
inner product between a sampling vector ``a`` and a signal ``x`` is
``a^H x`` (conjugation on the first argument) everywhere in this package,
and a measurement is ``b_i = |a_i^H x|^2 + eps_i``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import ParseError
from .rng import TAG_NOISE, TAG_SAMPLING, TAG_SIGNAL, stream

NOISE_KINDS = ("none", "type1", "type2", "type3", "gaussian")


class FieldTag(Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is FieldTag.REAL else np.complex128


def field_of(x: np.ndarray) -> FieldTag:
    return FieldTag.COMPLEX if np.iscomplexobj(x) else FieldTag.REAL


def correlate(a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Inner products <a_i, x> = a_i^H x for a stack of rows (or one vector)."""
    return a.conj() @ x


@dataclass(frozen=True)
class NoiseSpec:
    """One of the corruption models with its intensity eta.

    kind:
      none     -- eps = 0
      type1    -- dense bounded: eps_i ~ U(0, eta*||x_true||^2)
      type2    -- Laplace: eps_i ~ Laplace(0, mu/sqrt(2)), mu = eta*sqrt(sum b_i^2/n)
      type3    -- outliers: with prob eta, b_i replaced by U(0, ||x_true||^2)
      gaussian -- eps_i = eta*||b||/sqrt(n) * w_i, w_i ~ N(0,1)
    """

    kind: str = "none"
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind: {self.kind!r}")
        if self.eta < 0:
            raise ValueError("noise intensity eta must be nonnegative")

    @classmethod
    def parse(cls, text: str) -> "NoiseSpec":
        """Parse 'none' or 'kind:eta' (e.g. 'type2:0.1')."""
        if text == "none":
            return cls("none", 0.0)
        kind, sep, eta = text.partition(":")
        if not sep:
            raise ValueError(f"noise spec must look like 'kind:eta', got {text!r}")
        return cls(kind, float(eta))

    def __str__(self):
        return self.kind if self.kind == "none" else f"{self.kind}:{self.eta:g}"


@dataclass
class MeasurementEnsemble:
    """Sampling vectors, observations and optional ground truth of one instance."""

    field: FieldTag
    sampling_vectors: np.ndarray  # (n, p), rows a_i
    observations: np.ndarray  # (n,), b_i
    ground_truth: np.ndarray | None = None
    noise_record: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.sampling_vectors, dtype=self.field.dtype)
        b = np.asarray(self.observations, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError("sampling_vectors must be a nonempty (n, p) array")
        if b.shape != (a.shape[0],):
            raise ValueError("observations must have one entry per sampling vector")
        if not np.all(np.isfinite(b)) or not np.all(np.isfinite(a)):
            raise ValueError("ensemble contains non-finite entries")
        self.sampling_vectors = a
        self.observations = b
        if self.ground_truth is not None:
            x = np.asarray(self.ground_truth, dtype=self.field.dtype)
            if x.shape != (a.shape[1],):
                raise ValueError("ground_truth length must match signal dimension")
            self.ground_truth = x
        if self.noise_record is not None:
            eps = np.asarray(self.noise_record, dtype=np.float64)
            if eps.shape != b.shape:
                raise ValueError("noise_record length must match observations")
            self.noise_record = eps
        if self.ground_truth is not None and self.noise_record is not None:
            clean = np.abs(correlate(a, self.ground_truth)) ** 2
            gap = np.max(np.abs(b - clean - self.noise_record))
            if gap > 1e-12 * (1.0 + np.max(b, initial=0.0)):
                raise ValueError(
                    "observations inconsistent with ground truth and noise record"
                )

    @property
    def n(self) -> int:
        return self.sampling_vectors.shape[0]

    @property
    def p(self) -> int:
        return self.sampling_vectors.shape[1]

    def check_signal(self, x: np.ndarray) -> np.ndarray:
        """Validate a candidate signal against this ensemble's field and size."""
        x = np.asarray(x)
        if field_of(x) is not self.field:
            raise ValueError(
                f"signal field {field_of(x).value} does not match ensemble "
                f"field {self.field.value}"
            )
        if x.shape != (self.p,):
            raise ValueError(f"signal length {x.shape} does not match p={self.p}")
        return x.astype(self.field.dtype, copy=False)


def generate_signal(p: int, s: int, field: FieldTag, seed: int) -> np.ndarray:
    """Draw an s-sparse signal with standard normal nonzeros on a uniform support."""
    if p < 1:
        raise ValueError("signal dimension p must be positive")
    if not 1 <= s <= p:
        raise ValueError(f"sparsity s={s} must satisfy 1 <= s <= p={p}")
    rng = stream(seed, TAG_SIGNAL)
    support = rng.choice(p, size=s, replace=False)
    x = np.zeros(p, dtype=field.dtype)
    if field is FieldTag.REAL:
        x[support] = rng.standard_normal(s)
    else:
        # E|x_j|^2 = 1: real and imaginary parts each N(0, 1/2).
        x[support] = (rng.standard_normal(s) + 1j * rng.standard_normal(s)) / np.sqrt(2)
    return x


def generate_sampling(p: int, n: int, field: FieldTag, seed: int) -> np.ndarray:
    """Draw n sampling vectors with i.i.d. standard (complex) normal entries."""
    if p < 1 or n < 1:
        raise ValueError("sampling sizes n, p must be positive")
    rng = stream(seed, TAG_SAMPLING)
    if field is FieldTag.REAL:
        return rng.standard_normal((n, p))
    re = rng.standard_normal((n, p))
    im = rng.standard_normal((n, p))
    return (re + 1j * im) / np.sqrt(2)


def apply_noise(
    clean_b: np.ndarray, x_true: np.ndarray, spec: NoiseSpec, seed: int
) -> tuple[np.ndarray, np.ndarray]:
    """Corrupt clean measurements per ``spec``; returns (b, eps) with b = clean + eps."""
    clean_b = np.asarray(clean_b, dtype=np.float64)
    n = clean_b.shape[0]
    eps = np.zeros(n)
    if spec.kind == "none" or spec.eta == 0.0:
        return clean_b.copy(), eps
    rng = stream(seed, TAG_NOISE)
    power = float(np.linalg.norm(x_true) ** 2)
    if spec.kind == "type1":
        mu = spec.eta * power
        eps = rng.uniform(0.0, mu, size=n)
    elif spec.kind == "type2":
        mu = spec.eta * np.sqrt(np.sum(clean_b**2) / n)
        eps = rng.laplace(0.0, mu / np.sqrt(2), size=n)
    elif spec.kind == "type3":
        flags = rng.random(n) < spec.eta
        replacement = rng.uniform(0.0, power, size=n)
        eps = np.where(flags, replacement - clean_b, 0.0)
    elif spec.kind == "gaussian":
        scale = spec.eta * np.linalg.norm(clean_b) / np.sqrt(n)
        eps = scale * rng.standard_normal(n)
    return clean_b + eps, eps


def synthesize_instance(
    p: int, s: int, n: int, field: FieldTag, spec: NoiseSpec, seed: int
) -> MeasurementEnsemble:
    """Generate signal, sampling vectors and corrupted measurements from one seed."""
    x_true = generate_signal(p, s, field, seed)
    a = generate_sampling(p, n, field, seed)
    clean_b = np.abs(correlate(a, x_true)) ** 2
    b, eps = apply_noise(clean_b, x_true, spec, seed)
    return MeasurementEnsemble(
        field=field,
        sampling_vectors=a,
        observations=b,
        ground_truth=x_true,
        noise_record=eps,
        seed=seed,
    )


def encode_vector(arr: np.ndarray):
    if np.iscomplexobj(arr):
        return [[float(v.real), float(v.imag)] for v in arr.ravel()]
    return [float(v) for v in arr.ravel()]


def decode_vector(data, field: FieldTag, key: str) -> np.ndarray:
    try:
        if field is FieldTag.COMPLEX:
            return np.array([complex(re, im) for re, im in data], dtype=np.complex128)
        return np.array(data, dtype=np.float64)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"malformed field: {key}") from exc


def serialize_instance(e: MeasurementEnsemble) -> str:
    """Render an ensemble as a JSON document (lossless round-trip)."""
    doc = {
        "field": e.field.value,
        "p": e.p,
        "n": e.n,
        "seed": e.seed,
        "a": encode_vector(e.sampling_vectors),
        "b": encode_vector(e.observations),
    }
    if e.ground_truth is not None:
        doc["x_true"] = encode_vector(e.ground_truth)
    if e.noise_record is not None:
        doc["eps"] = encode_vector(e.noise_record)
    return json.dumps(doc)


def deserialize_instance(text: str) -> MeasurementEnsemble:
    """Parse a JSON instance document; raises ParseError naming the bad key."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    for key in ("p", "n", "field", "seed", "a", "b"):
        if key not in doc:
            raise ParseError(f"missing field: {key}")
    try:
        field = FieldTag(doc["field"])
    except ValueError as exc:
        raise ParseError("malformed field: field") from exc
    p, n = int(doc["p"]), int(doc["n"])
    a_flat = doc["a"]
    if len(a_flat) != n * p:
        raise ParseError("malformed field: a")
    a = decode_vector(a_flat, field, "a").reshape(n, p)
    b = decode_vector(doc["b"], FieldTag.REAL, "b")
    x_true = (
        decode_vector(doc["x_true"], field, "x_true") if "x_true" in doc else None
    )
    eps = decode_vector(doc["eps"], FieldTag.REAL, "eps") if "eps" in doc else None
    try:
        return MeasurementEnsemble(
            field=field,
            sampling_vectors=a,
            observations=b,
            ground_truth=x_true,
            noise_record=eps,
            seed=int(doc["seed"]),
        )
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
