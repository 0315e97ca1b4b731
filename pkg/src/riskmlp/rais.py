"""Risk Assessment Index System construction.

Standardizes candidate risk variables, runs PCA on their correlation
matrix, and selects the retained variable subset by communality. The
shipped default schemas (20 candidate variables, 17 retained) are the
reference index system; the retained set is carried verbatim, not
re-derived.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import linalg

RISK_CONTENTS = {
    "A": "R&D",
    "B": "Technical",
    "C": "Production",
    "D": "Marketing",
    "E": "Management",
    "F": "Environmental",
}

DEFAULT_KAISER_THRESHOLD = 1.0
DEFAULT_COMMUNALITY_THRESHOLD = 0.5


class ParameterError(ValueError):
    """A configuration value is out of its allowed range."""


class DegenerateVariableError(ValueError):
    """A variable has zero variance and cannot be standardized."""


@dataclass(frozen=True)
class RiskVariable:
    code: str
    label: str
    content: str

    def __post_init__(self):
        expected = RISK_CONTENTS.get(self.code[:1])
        if expected != self.content:
            raise ValueError(
                f"variable {self.code}: content {self.content!r} does not match "
                f"code prefix (expected {expected!r})"
            )


@dataclass(frozen=True)
class RaisSchema:
    variables: tuple[RiskVariable, ...]
    version: str

    def __post_init__(self):
        if not self.variables:
            raise ValueError("schema must contain at least one variable")
        codes = [v.code for v in self.variables]
        if len(set(codes)) != len(codes):
            raise ValueError("variable codes must be unique")

    @property
    def codes(self) -> list[str]:
        return [v.code for v in self.variables]

    def __len__(self) -> int:
        return len(self.variables)


def _v(code: str, label: str) -> RiskVariable:
    return RiskVariable(code=code, label=label, content=RISK_CONTENTS[code[0]])


_CANDIDATE_VARIABLES = (
    _v("A1", "The financial resources availability"),
    _v("A2", "Capable human resources"),
    _v("A3", "Knowledge resources"),
    _v("B1", "Technical maturity"),
    _v("B2", "Technology substitutability"),
    _v("B3", "Technology advantage"),
    _v("C1", "The standardization degree of the production tools"),
    _v("C2", "The standardization degree of the production process"),
    _v("C3", "The supply capability of the raw material"),
    _v("D1", "Market prospects"),
    _v("D2", "Substitute products"),
    _v("D3", "The product life cycles"),
    _v("D4", "Product competitiveness"),
    _v("D5", "Possibility of new entrants"),
    _v("E1", "The degree of managers' technical competencies"),
    _v("E2", "The maturity of project management methods"),
    _v("E3", "The scientific weights of decisions"),
    _v("E4", "The quality of managers' behavior"),
    _v("F1", "The quality of conformation to cultural norms"),
    _v("F2", "The degree of governmental support"),
)

# Reference reduction: candidate set minus {B2, D3, E2}.
_DROPPED_REFERENCE_CODES = {"B2", "D3", "E2"}

DEFAULT_CANDIDATE_SCHEMA = RaisSchema(variables=_CANDIDATE_VARIABLES, version="candidate-v1")
DEFAULT_RETAINED_SCHEMA = RaisSchema(
    variables=tuple(
        v for v in _CANDIDATE_VARIABLES if v.code not in _DROPPED_REFERENCE_CODES
    ),
    version="retained-v1",
)


@dataclass
class PcaResult:
    eigenvalues: np.ndarray
    loadings: np.ndarray  # variables x components, eigvec entry * sqrt(eigval)
    explained_variance_ratio: np.ndarray
    communalities: np.ndarray  # per variable, over retained components
    retained_component_count: int


def standardize(x: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Center each column and scale to unit sample (n-1) standard deviation."""
    x = linalg.as_matrix(x)
    if x.shape[0] < 2:
        raise ParameterError("standardization needs at least 2 samples")
    means = x.mean(axis=0)
    stds = x.std(axis=0, ddof=1)
    for jcol in np.nonzero(stds == 0.0)[0]:
        raise DegenerateVariableError(f"column {jcol} has zero variance")
    return (x - means) / stds, means, stds


def pca(
    z: np.ndarray, kaiser_threshold: float = DEFAULT_KAISER_THRESHOLD
) -> PcaResult:
    """PCA of the correlation matrix z^T z / (n-1) of standardized data.

    Components are retained when their eigenvalue exceeds the Kaiser
    threshold; each variable's communality is its squared-loading sum over
    the retained components.
    """
    z = linalg.as_matrix(z)
    n, p = z.shape
    if n <= p:
        warnings.warn(
            f"only {n} samples for {p} variables; loadings may be unstable",
            stacklevel=2,
        )
    corr = (z.T @ z) / (n - 1)
    eigvals, eigvecs = linalg.sym_eig(corr)
    eigvals = np.where(np.abs(eigvals) < 1e-10, 0.0, eigvals)
    if np.any(eigvals < 0):
        raise ValueError("correlation matrix has a negative eigenvalue")
    loadings = eigvecs * np.sqrt(eigvals)[np.newaxis, :]
    retained = int(np.sum(eigvals > kaiser_threshold))
    communalities = np.sum(loadings[:, :retained] ** 2, axis=1)
    return PcaResult(
        eigenvalues=eigvals,
        loadings=loadings,
        explained_variance_ratio=eigvals / np.sum(eigvals),
        communalities=communalities,
        retained_component_count=retained,
    )


def select_variables(
    candidates: RaisSchema,
    result: PcaResult,
    communality_threshold: float = DEFAULT_COMMUNALITY_THRESHOLD,
) -> tuple[RaisSchema, list[dict]]:
    """Keep variables whose communality reaches the threshold.

    Returns the reduced schema (order preserved) and a per-variable
    selection report: {code, communality, kept}.
    """
    if not 0.0 <= communality_threshold <= 1.0:
        raise ParameterError(
            f"communality threshold {communality_threshold} outside [0, 1]"
        )
    if len(result.communalities) != len(candidates):
        raise ValueError(
            f"PCA over {len(result.communalities)} variables does not match "
            f"schema of {len(candidates)}"
        )
    report = []
    kept_vars = []
    for var, comm in zip(candidates.variables, result.communalities):
        kept = bool(comm >= communality_threshold)
        report.append({"code": var.code, "communality": float(comm), "kept": kept})
        if kept:
            kept_vars.append(var)
    schema = RaisSchema(
        variables=tuple(kept_vars), version=candidates.version + "-selected"
    )
    return schema, report


def save_schema(schema: RaisSchema, path: str) -> None:
    """Schema file format: a JSON list of {code, label, content}."""
    doc = [
        {"code": v.code, "label": v.label, "content": v.content}
        for v in schema.variables
    ]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")


def load_schema(path: str, version: str = "file") -> RaisSchema:
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    return RaisSchema(
        variables=tuple(
            RiskVariable(code=v["code"], label=v["label"], content=v["content"])
            for v in doc
        ),
        version=version,
    )
