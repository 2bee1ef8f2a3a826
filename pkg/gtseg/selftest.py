from __future__ import annotations

import time
from typing import Any, Callable, Dict, List

import numpy as np

from gtseg.engine.conv import conv2d
from gtseg.engine.gradcheck import DEFAULT_TOLERANCE, gradcheck
from gtseg.engine.tensor import Tensor, matmul, no_grad, softmax
from gtseg.loss.contour import Contour
from gtseg.loss.descriptor import fourier_descriptor, normalize_descriptor
from gtseg.loss.fd_loss import bce, fd_loss
from gtseg.model.attention import MHSAWeights, mhsa_forward
from gtseg.model.complexity import verify_complexity

TESTS = ("gradients", "attention", "complexity", "descriptor", "loss", "suite")
COMPLEXITY_CASES = ((8, 8, 16, 8, 8, 1), (16, 16, 16, 8, 8, 2), (32, 32, 32, 8, 8, 2))


# -----------------------------
# Helpers
# -----------------------------
def _check(name: str, passed: bool, value: Any, threshold: str) -> Dict[str, Any]:
    return {"name": name, "pass": bool(passed), "value": value, "threshold": threshold}


def _param(rng: np.random.Generator, *shape: int) -> Tensor:
    return Tensor(rng.normal(size=shape), requires_grad=True)


def analytic_contour(n: int = 128, start: int = 0) -> np.ndarray:
    """Three-harmonic closed curve sampled at n points, starting at index ``start``."""
    t = 2.0 * np.pi * (np.arange(n) + start) / n
    x = 3.0 * np.cos(t) + 0.6 * np.cos(2 * t) + 0.2 * np.sin(3 * t)
    y = 2.0 * np.sin(t) + 0.4 * np.sin(2 * t) - 0.1 * np.cos(3 * t)
    return np.column_stack([x, y])


def _descriptor(points: np.ndarray, k: int = 16) -> np.ndarray:
    return normalize_descriptor(fourier_descriptor(Contour(points=points)), k)


# -----------------------------
# Individual checks
# -----------------------------
def _gradient_checks(rng: np.random.Generator) -> List[Dict[str, Any]]:
    def matmul_case():
        a, b = _param(rng, 3, 4), _param(rng, 4, 2)
        return (lambda: (matmul(a, b) ** 2).sum()), [a, b]

    def softmax_case():
        a, w = _param(rng, 2, 5), Tensor(rng.normal(size=(2, 5)))
        return (lambda: (softmax(a) * w).sum()), [a]

    def conv_case():
        x, k, b = _param(rng, 1, 2, 5, 5), _param(rng, 3, 2, 3, 3), _param(rng, 3)
        return (lambda: (conv2d(x, k, b, padding=1) ** 2).mean()), [x, k, b]

    def attention_case():
        weights = MHSAWeights(4, 2, 2, 2, rng)
        weights.rel_h.data[...] = rng.normal(size=weights.rel_h.shape)
        weights.rel_w.data[...] = rng.normal(size=weights.rel_w.shape)
        tokens = _param(rng, 2, 4, 4)
        return (lambda: (mhsa_forward(tokens, weights) ** 2).sum()), [tokens] + weights.parameters()

    cases: Dict[str, Callable[[], tuple]] = {
        "matmul": matmul_case,
        "softmax": softmax_case,
        "conv2d": conv_case,
        "mhsa": attention_case,
    }
    errors = {}
    for name, build in cases.items():
        fn, inputs = build()
        result = gradcheck(fn, inputs)
        errors[name] = {
            "relative": result.max_relative_error,
            "max_element": result.max_element_error,
            "at": [result.worst_input, *result.worst_index],
        }
    worst = max(e["relative"] for e in errors.values())
    return [_check("Autodiff matches central differences", worst < DEFAULT_TOLERANCE, errors, f"< {DEFAULT_TOLERANCE}")]


def _attention_checks(rng: np.random.Generator) -> List[Dict[str, Any]]:
    weights = MHSAWeights(8, 2, 4, 4, rng)
    tokens = Tensor(rng.normal(size=(3, 16, 8)))
    with no_grad():
        _, attention = mhsa_forward(tokens, weights, return_attention=True)
    deviation = float(np.max(np.abs(attention.data.sum(axis=-1) - 1.0)))
    return [_check("Attention rows sum to 1", deviation < 1e-5, deviation, "< 1e-5")]


def _complexity_checks() -> List[Dict[str, Any]]:
    checks = []
    for case in COMPLEXITY_CASES:
        result = verify_complexity(*case)
        checks.append(
            _check(
                f"Closed-form MACs equal counted MACs for {case}",
                result["ok"],
                {"measured": result["measured"], "expected": result["expected"]},
                "exact",
            )
        )
    single = verify_complexity(*COMPLEXITY_CASES[0])["report"]
    checks.append(
        _check(
            "Single group with phi=1 costs the same as global MHSA",
            single["omega_gt_total"] == single["omega_mhsa"],
            {"gt": single["omega_gt_total"], "mhsa": single["omega_mhsa"]},
            "equal",
        )
    )
    return checks


def _descriptor_checks() -> List[Dict[str, Any]]:
    base = analytic_contour()
    reference = _descriptor(base)
    angle = np.deg2rad(30.0)
    rotation = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
    variants = {
        "translate": base + np.array([7.5, -3.25]),
        "scale_0.5": 0.5 * base,
        "scale_3": 3.0 * base,
        "rotate_30": base @ rotation.T,
        "rotate_90": np.column_stack([-base[:, 1], base[:, 0]]),
        "start_17": np.roll(base, -17, axis=0),
    }
    worst = max(float(np.max(np.abs(_descriptor(p) - reference))) for p in variants.values())
    t = 2.0 * np.pi * np.arange(128) / 128
    circle = _descriptor(np.column_stack([5.0 * np.cos(t), 5.0 * np.sin(t)]))
    return [
        _check("Normalized descriptors are similarity invariant", worst < 1e-9, worst, "< 1e-9"),
        _check("Circle has an all-zero normalized descriptor", float(np.max(circle)) < 1e-9,
               float(np.max(circle)), "< 1e-9"),
    ]


def _loss_checks(rng: np.random.Generator) -> List[Dict[str, Any]]:
    violations = 0
    for _ in range(5):
        target = np.zeros((1, 1, 16, 16))
        top, left = rng.integers(2, 6, size=2)
        target[0, 0, top:top + 8, left:left + 6] = 1.0
        pred = Tensor(np.clip(rng.uniform(size=target.shape), 0.01, 0.99))
        with no_grad():
            plain = bce(pred, target).item()
            shaped = fd_loss(pred, target).item()
        if not (0.5 * plain - 1e-12 <= shaped <= plain + 1e-12):
            violations += 1
    return [_check("FD loss lies between 0.5·BCE and BCE", violations == 0, violations, "0 violations")]


# -----------------------------
# Public API
# -----------------------------
def run_selftest(seed: int = 7, test: str = "suite") -> Dict[str, Any]:
    """
    Built-in verification suite. Returns a JSON-ready payload with one entry
    per check; ``ok`` is False when any check fails or raises.
    """
    t0 = time.time()
    test = (test or "suite").strip().lower()
    if test not in TESTS:
        raise ValueError(f"test must be one of {TESTS}, got {test!r}")
    rng = np.random.default_rng(int(seed))
    runners = {
        "gradients": lambda: _gradient_checks(rng),
        "attention": lambda: _attention_checks(rng),
        "complexity": _complexity_checks,
        "descriptor": _descriptor_checks,
        "loss": lambda: _loss_checks(rng),
    }
    selected = [name for name in runners if test in (name, "suite")]

    checks: List[Dict[str, Any]] = []
    for name in selected:
        try:
            checks.extend(runners[name]())
        except Exception as exc:
            checks.append(_check(f"{name} raised", False, f"{type(exc).__name__}: {exc}", "no exception"))

    return {
        "ok": all(c["pass"] for c in checks),
        "test": test,
        "seed": int(seed),
        "elapsed_ms": int((time.time() - t0) * 1000),
        "passed": sum(1 for c in checks if c["pass"]),
        "failed": sum(1 for c in checks if not c["pass"]),
        "checks": checks,
    }
