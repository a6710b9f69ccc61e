"""Modular grounding scorer with exact analytic gradients.

The scorer mixes three bilinear pathways (subject, location, relation) through
an expression-conditioned softmax attention:

    attention  = softmax(attn_proj @ expression)          shape (3,)
    s[m, j]    = expression @ bilinear_m @ v_m[j]         per-module scores
    scores[j]  = sum_m attention[m] * s[m, j]
    probs      = softmax(scores)

Grounding picks argmax(scores); training minimizes the cross-entropy
-log probs[gt_index]. All gradients are hand-derived reverse mode, exact to
float64 rounding, which keeps runs bit-reproducible and dependency-light.

Parameters live in four blocks with a canonical flat ordering
(shared attention projection, then subject / location / relation bilinears);
gradient vectors are plain float64 arrays aligned with that ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODULES = ("sub", "loc", "rel")
BLOCKS = ("shared", "sub", "loc", "rel")


def _finite_array(value, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must contain only finite values")
    return arr


@dataclass(frozen=True)
class Sample:
    """One grounding instance: expression vector plus J candidate feature triples.

    Candidate features are stacked row-wise: v_sub[j] is candidate j's subject
    feature vector, and the three stacks share the same (J, d_v) shape.
    """

    expression: np.ndarray
    v_sub: np.ndarray
    v_loc: np.ndarray
    v_rel: np.ndarray
    gt_index: int
    category_id: int

    def __post_init__(self):
        object.__setattr__(self, "expression", _finite_array(self.expression, "expression"))
        if self.expression.ndim != 1 or self.expression.size < 1:
            raise ValueError("expression must be a non-empty vector")
        for name in ("v_sub", "v_loc", "v_rel"):
            arr = _finite_array(getattr(self, name), name)
            if arr.ndim != 2:
                raise ValueError(f"{name} must have shape (J, d_v)")
            object.__setattr__(self, name, arr)
        if self.v_loc.shape != self.v_sub.shape or self.v_rel.shape != self.v_sub.shape:
            raise ValueError("candidate feature stacks must share one shape")
        j = self.v_sub.shape[0]
        if j < 1:
            raise ValueError("need at least one candidate")
        if not 0 <= int(self.gt_index) < j:
            raise ValueError(f"gt_index {self.gt_index} out of range for {j} candidates")
        object.__setattr__(self, "gt_index", int(self.gt_index))
        object.__setattr__(self, "category_id", int(self.category_id))

    @property
    def num_candidates(self) -> int:
        return self.v_sub.shape[0]

    def features(self, module: str) -> np.ndarray:
        return getattr(self, f"v_{module}")


@dataclass(frozen=True)
class ModelParams:
    """All learnable parameters, partitioned into shared + three module blocks.

    attn_proj (3, d_e) is the shared attention projection; bilinear_sub /
    bilinear_loc / bilinear_rel (d_e, d_v) score candidates for their module.
    Treat instances as immutable; updates build new instances via from_flat.
    """

    attn_proj: np.ndarray
    bilinear_sub: np.ndarray
    bilinear_loc: np.ndarray
    bilinear_rel: np.ndarray

    def __post_init__(self):
        attn = _finite_array(self.attn_proj, "attn_proj")
        if attn.ndim != 2 or attn.shape[0] != 3:
            raise ValueError("attn_proj must have shape (3, d_e)")
        object.__setattr__(self, "attn_proj", attn)
        d_e = attn.shape[1]
        for name in ("bilinear_sub", "bilinear_loc", "bilinear_rel"):
            mat = _finite_array(getattr(self, name), name)
            if mat.ndim != 2 or mat.shape[0] != d_e:
                raise ValueError(f"{name} must have shape (d_e, d_v) with d_e={d_e}")
            object.__setattr__(self, name, mat)
        if self.bilinear_loc.shape != self.bilinear_sub.shape or self.bilinear_rel.shape != self.bilinear_sub.shape:
            raise ValueError("bilinear blocks must share one shape")

    @property
    def d_e(self) -> int:
        return self.attn_proj.shape[1]

    @property
    def d_v(self) -> int:
        return self.bilinear_sub.shape[1]

    @property
    def n_params(self) -> int:
        return num_params(self.d_e, self.d_v)

    def bilinear(self, module: str) -> np.ndarray:
        return getattr(self, f"bilinear_{module}")

    def flat_view(self) -> np.ndarray:
        """Canonical flat ordering: shared, sub, loc, rel (row-major blocks)."""
        return np.concatenate([
            self.attn_proj.ravel(),
            self.bilinear_sub.ravel(),
            self.bilinear_loc.ravel(),
            self.bilinear_rel.ravel(),
        ])

    @classmethod
    def from_flat(cls, flat: np.ndarray, d_e: int, d_v: int) -> "ModelParams":
        flat = np.asarray(flat, dtype=np.float64)
        if flat.shape != (num_params(d_e, d_v),):
            raise ValueError(f"flat vector must have length {num_params(d_e, d_v)}")
        s = block_slices(d_e, d_v)
        return cls(
            attn_proj=flat[s["shared"]].reshape(3, d_e).copy(),
            bilinear_sub=flat[s["sub"]].reshape(d_e, d_v).copy(),
            bilinear_loc=flat[s["loc"]].reshape(d_e, d_v).copy(),
            bilinear_rel=flat[s["rel"]].reshape(d_e, d_v).copy(),
        )

    def block_slices(self) -> dict[str, slice]:
        return block_slices(self.d_e, self.d_v)


def num_params(d_e: int, d_v: int) -> int:
    return 3 * d_e + 3 * d_e * d_v


def block_slices(d_e: int, d_v: int) -> dict[str, slice]:
    """Flat-vector slice per parameter block, in canonical order."""
    shared = 3 * d_e
    module = d_e * d_v
    return {
        "shared": slice(0, shared),
        "sub": slice(shared, shared + module),
        "loc": slice(shared + module, shared + 2 * module),
        "rel": slice(shared + 2 * module, shared + 3 * module),
    }


def block_ids(d_e: int, d_v: int) -> np.ndarray:
    """Block index per flat scalar: 0 shared, 1 sub, 2 loc, 3 rel."""
    ids = np.empty(num_params(d_e, d_v), dtype=np.int8)
    for i, name in enumerate(BLOCKS):
        ids[block_slices(d_e, d_v)[name]] = i
    return ids


def init_params(seed: int, d_e: int, d_v: int) -> ModelParams:
    """Seeded uniform init in [-s, s] with s = 1/sqrt(d_e).

    The scale keeps initial logits O(1) so neither softmax starts saturated.
    """
    if d_e < 1 or d_v < 1:
        raise ValueError("d_e and d_v must be positive")
    rng = np.random.default_rng(seed)
    scale = 1.0 / np.sqrt(d_e)
    flat = rng.uniform(-scale, scale, size=num_params(d_e, d_v))
    return ModelParams.from_flat(flat, d_e, d_v)


@dataclass(frozen=True)
class ForwardResult:
    scores: np.ndarray
    attention: np.ndarray
    probabilities: np.ndarray


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max()
    e = np.exp(shifted)
    return e / e.sum()


def _check_dims(params: ModelParams, sample: Sample) -> None:
    if sample.expression.shape[0] != params.d_e:
        raise ValueError(f"expression length {sample.expression.shape[0]} != d_e {params.d_e}")
    if sample.v_sub.shape[1] != params.d_v:
        raise ValueError(f"candidate feature length {sample.v_sub.shape[1]} != d_v {params.d_v}")


def _forward_parts(params: ModelParams, sample: Sample):
    """Forward pass returning the result plus the (3, J) module-score cache."""
    _check_dims(params, sample)
    e = sample.expression
    attention = _softmax(params.attn_proj @ e)
    mod_scores = np.stack([sample.features(m) @ (params.bilinear(m).T @ e) for m in MODULES])
    scores = attention @ mod_scores
    return ForwardResult(scores, attention, _softmax(scores)), mod_scores


def forward(params: ModelParams, sample: Sample) -> ForwardResult:
    """Score every candidate; attention and probabilities each sum to one."""
    result, _ = _forward_parts(params, sample)
    return result


def loss(params: ModelParams, sample: Sample) -> float:
    """Cross-entropy -log probs[gt_index], computed via log-sum-exp (always >= 0)."""
    result, _ = _forward_parts(params, sample)
    scores = result.scores
    m = scores.max()
    return float(m + np.log(np.exp(scores - m).sum()) - scores[sample.gt_index])


def _backprop_scores(params: ModelParams, sample: Sample, attention: np.ndarray,
                     mod_scores: np.ndarray, d_scores: np.ndarray) -> np.ndarray:
    """Exact flat gradient for a scalar with upstream derivative d_scores.

    Chain: scores -> (attention, module scores) -> (attn_proj, bilinears).
    """
    e = sample.expression
    d_mod = attention[:, None] * d_scores[None, :]
    d_att = mod_scores @ d_scores
    d_logits = attention * (d_att - attention @ d_att)
    grads = [np.outer(d_logits, e).ravel()]
    for i, m in enumerate(MODULES):
        grads.append(np.outer(e, d_mod[i] @ sample.features(m)).ravel())
    return np.concatenate(grads)


def grad_loss(params: ModelParams, sample: Sample) -> np.ndarray:
    """Gradient of loss() over the flat parameter vector."""
    result, mod_scores = _forward_parts(params, sample)
    d_scores = result.probabilities.copy()
    d_scores[sample.gt_index] -= 1.0
    return _backprop_scores(params, sample, result.attention, mod_scores, d_scores)


def grad_output_norm(params: ModelParams, sample: Sample) -> np.ndarray:
    """Gradient of the squared L2 norm of the score vector over the flat params.

    This is the label-free sensitivity signal used for parameter importance:
    large entries mark parameters the scoring function currently relies on.
    """
    result, mod_scores = _forward_parts(params, sample)
    return _backprop_scores(params, sample, result.attention, mod_scores, 2.0 * result.scores)


def output_norm(params: ModelParams, sample: Sample) -> float:
    result, _ = _forward_parts(params, sample)
    return float(result.scores @ result.scores)


def mean_loss_and_grad(params: ModelParams, samples) -> tuple[float, np.ndarray]:
    """Average cross-entropy and its gradient over a batch."""
    if not samples:
        raise ValueError("batch must be non-empty")
    total = 0.0
    grad = np.zeros(params.n_params)
    for sample in samples:
        result, mod_scores = _forward_parts(params, sample)
        scores = result.scores
        m = scores.max()
        total += float(m + np.log(np.exp(scores - m).sum()) - scores[sample.gt_index])
        d_scores = result.probabilities.copy()
        d_scores[sample.gt_index] -= 1.0
        grad += _backprop_scores(params, sample, result.attention, mod_scores, d_scores)
    n = len(samples)
    return total / n, grad / n
