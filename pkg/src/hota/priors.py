"""Prior families and the log prior ratio entering the q correction.

Three kinds are supported: flat, diagonal normal N(mu0, k*I), and the
matching prior. The matching prior has no density ratio; models that
register a closed-form correction (logistic regression) handle it through
a dedicated q evaluator instead.

Priors are declared, and evaluated, on the natural parameter scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

KINDS = ("flat", "diag_normal", "matching")


@dataclass(frozen=True)
class PriorSpec:
    kind: str
    mu0: float | np.ndarray | None = None
    k: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown prior kind {self.kind!r}")
        if self.kind == "diag_normal":
            if self.k is None or not self.k > 0:
                raise ValidationError("diag_normal prior needs variance scale k > 0")
            if self.mu0 is None:
                object.__setattr__(self, "mu0", 0.0)
        elif self.k is not None or self.mu0 is not None:
            raise ValidationError(f"{self.kind} prior takes no k or mu0")

    def label(self) -> str:
        if self.kind == "flat":
            return "flat"
        if self.kind == "matching":
            return "matching"
        mu = self.mu0 if self.mu0 is not None else 0
        return f"normal:k={self.k:g},mu0={np.asarray(mu).ravel()[0]:g}"


def flat_prior() -> PriorSpec:
    return PriorSpec(kind="flat")


def normal_prior(k: float, mu0: float | np.ndarray | None = None) -> PriorSpec:
    return PriorSpec(kind="diag_normal", mu0=mu0, k=float(k))


def matching_prior() -> PriorSpec:
    return PriorSpec(kind="matching")


def log_prior_ratio(prior: PriorSpec, theta_hat: np.ndarray, theta_psi: np.ndarray) -> float:
    """log of pi(theta_hat) / pi(theta_psi), both points on the natural scale."""
    if prior.kind == "flat":
        return 0.0
    if prior.kind == "matching":
        raise ValidationError("matching prior has no density ratio; use the matching q form")
    theta_hat = np.asarray(theta_hat, dtype=float)
    theta_psi = np.asarray(theta_psi, dtype=float)
    mu0 = 0.0 if prior.mu0 is None else np.asarray(prior.mu0, dtype=float)
    d_hat = theta_hat - mu0
    d_psi = theta_psi - mu0
    return float((d_psi @ d_psi - d_hat @ d_hat) / (2.0 * prior.k))


def parse_prior(text: str) -> PriorSpec:
    """Parse the CLI prior syntax: flat | matching | normal:k=35[,mu0=0]."""
    text = text.strip()
    if text == "flat":
        return flat_prior()
    if text == "matching":
        return matching_prior()
    if text.startswith("normal:"):
        k = None
        mu0 = None
        for part in text[len("normal:"):].split(","):
            part = part.strip()
            if not part:
                continue
            key, _, value = part.partition("=")
            try:
                parsed = float(value)
            except ValueError:
                raise ValidationError(f"bad prior parameter {part!r}") from None
            if key == "k":
                k = parsed
            elif key == "mu0":
                mu0 = parsed
            else:
                raise ValidationError(f"unknown prior parameter {key!r}")
        if k is None:
            raise ValidationError("normal prior needs k, e.g. normal:k=35")
        return normal_prior(k, mu0)
    raise ValidationError(f"cannot parse prior {text!r} (flat | normal:k=V[,mu0=V] | matching)")
