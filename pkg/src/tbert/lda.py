"""Latent Dirichlet Allocation via collapsed Gibbs sampling.

The sampler integrates out the topic mixtures and word distributions
and resamples token-level assignments from count statistics, using the
full conditional p(z = t) proportional to
(n_dt + alpha) * (n_tw + beta) / (n_t + V*beta).

The hot loop is compiled with numba; the compiled kernel reseeds its
RNG on entry, so results are bit-identical for a fixed seed no matter
how many models were trained before in the same process.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .corpus import Corpus


class LdaError(ValueError):
    """Raised for invalid hyperparameters or incompatible inputs."""


@dataclass(frozen=True)
class LdaHyperParams:
    k: int
    alpha: float = 0.1
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    seed: int = 0
    average_after_burn_in: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise LdaError("k must be at least 1")
        if not (self.alpha > 0 and self.beta > 0):
            raise LdaError("alpha and beta must be positive")
        if not self.iterations > self.burn_in >= 0:
            raise LdaError("need iterations > burn_in >= 0")


@dataclass
class LdaModel:
    """Trained sampler state: distributions, assignments, and counts."""

    params: LdaHyperParams
    terms: list[str]
    doc_ids: list[str]
    phi: np.ndarray
    theta: np.ndarray
    z: np.ndarray | None = None
    token_doc: np.ndarray | None = None
    token_word: np.ndarray | None = None
    n_dk: np.ndarray | None = None
    n_kw: np.ndarray | None = None
    n_k: np.ndarray | None = None

    @property
    def k(self) -> int:
        return self.phi.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.phi.shape[1]

    @property
    def num_docs(self) -> int:
        return self.theta.shape[0]

    def save(self, path) -> None:
        payload = {
            "k": self.params.k,
            "alpha": self.params.alpha,
            "beta": self.params.beta,
            "iterations": self.params.iterations,
            "burn_in": self.params.burn_in,
            "seed": self.params.seed,
            "average_after_burn_in": self.params.average_after_burn_in,
            "terms": self.terms,
            "doc_ids": self.doc_ids,
            "phi": [float(x) for x in self.phi.ravel()],
            "theta": [float(x) for x in self.theta.ravel()],
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, sort_keys=True, separators=(",", ":"))
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "LdaModel":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        params = LdaHyperParams(
            k=int(payload["k"]),
            alpha=float(payload["alpha"]),
            beta=float(payload["beta"]),
            iterations=int(payload["iterations"]),
            burn_in=int(payload["burn_in"]),
            seed=int(payload["seed"]),
            average_after_burn_in=bool(payload.get("average_after_burn_in", False)),
        )
        terms = [str(t) for t in payload["terms"]]
        doc_ids = [str(d) for d in payload["doc_ids"]]
        k, v, m = params.k, len(terms), len(doc_ids)
        phi = np.array(payload["phi"], dtype=np.float64).reshape(k, v)
        theta = np.array(payload["theta"], dtype=np.float64).reshape(m, k)
        return cls(params=params, terms=terms, doc_ids=doc_ids, phi=phi, theta=theta)


@njit(cache=True)
def _gibbs_kernel(token_doc, token_word, m, v, k, iterations, burn_in,
                  alpha, beta, seed, average):
    np.random.seed(seed)
    n_tokens = token_doc.shape[0]
    z = np.empty(n_tokens, dtype=np.int32)
    n_dk = np.zeros((m, k), dtype=np.int64)
    n_wk = np.zeros((v, k), dtype=np.int64)
    n_k = np.zeros(k, dtype=np.int64)
    acc_dk = np.zeros((m, k), dtype=np.float64)
    acc_wk = np.zeros((v, k), dtype=np.float64)
    acc_k = np.zeros(k, dtype=np.float64)

    for i in range(n_tokens):
        t = np.random.randint(0, k)
        z[i] = t
        n_dk[token_doc[i], t] += 1
        n_wk[token_word[i], t] += 1
        n_k[t] += 1

    probs = np.empty(k, dtype=np.float64)
    v_beta = v * beta
    samples = 0
    for sweep in range(iterations):
        for i in range(n_tokens):
            d = token_doc[i]
            w = token_word[i]
            t = z[i]
            n_dk[d, t] -= 1
            n_wk[w, t] -= 1
            n_k[t] -= 1
            total = 0.0
            for j in range(k):
                total += (n_dk[d, j] + alpha) * (n_wk[w, j] + beta) / (n_k[j] + v_beta)
                probs[j] = total
            u = np.random.random() * total
            t = 0
            while t < k - 1 and probs[t] < u:
                t += 1
            z[i] = t
            n_dk[d, t] += 1
            n_wk[w, t] += 1
            n_k[t] += 1
        if average and sweep >= burn_in:
            samples += 1
            acc_dk += n_dk
            acc_wk += n_wk
            acc_k += n_k
    return z, n_dk, n_wk, n_k, acc_dk, acc_wk, acc_k, samples


def _flatten(corpus: Corpus) -> tuple[np.ndarray, np.ndarray]:
    docs, words = [], []
    for d, bow in enumerate(corpus.bows()):
        for term_idx, count in bow:
            docs.extend([d] * count)
            words.extend([term_idx] * count)
    return (
        np.array(docs, dtype=np.int32),
        np.array(words, dtype=np.int32),
    )


def train_lda(corpus: Corpus, params: LdaHyperParams) -> LdaModel:
    """Run collapsed Gibbs sampling and estimate theta/phi from counts.

    By default the estimates come from the final sweep's counts,
    smoothed by the priors.  With average_after_burn_in, post-burn-in
    sweeps are averaged instead.
    """
    m = len(corpus.docs)
    v = len(corpus.vocabulary)
    if m == 0:
        raise LdaError("empty corpus")
    if v == 0:
        raise LdaError("empty vocabulary")
    token_doc, token_word = _flatten(corpus)
    z, n_dk, n_wk, n_k, acc_dk, acc_wk, acc_k, samples = _gibbs_kernel(
        token_doc,
        token_word,
        m,
        v,
        params.k,
        params.iterations,
        params.burn_in,
        params.alpha,
        params.beta,
        params.seed,
        params.average_after_burn_in,
    )

    if __debug__:
        total = token_doc.shape[0]
        assert int(n_dk.sum()) == total
        assert int(n_wk.sum()) == total
        assert int(n_k.sum()) == total

    if params.average_after_burn_in and samples > 0:
        eff_dk = acc_dk / samples
        eff_wk = acc_wk / samples
        eff_k = acc_k / samples
    else:
        eff_dk = n_dk.astype(np.float64)
        eff_wk = n_wk.astype(np.float64)
        eff_k = n_k.astype(np.float64)

    doc_len = eff_dk.sum(axis=1)
    theta = (eff_dk + params.alpha) / (doc_len[:, None] + params.k * params.alpha)
    phi = (eff_wk.T + params.beta) / (eff_k[:, None] + v * params.beta)

    return LdaModel(
        params=params,
        terms=list(corpus.vocabulary.terms),
        doc_ids=corpus.ids,
        phi=phi,
        theta=theta,
        z=z,
        token_doc=token_doc,
        token_word=token_word,
        n_dk=n_dk,
        n_kw=n_wk.T.copy(),
        n_k=n_k,
    )


def doc_topic_vector(model: LdaModel, doc_index: int) -> np.ndarray:
    """The omega vector for one document: its row of theta."""
    if not 0 <= doc_index < model.num_docs:
        raise LdaError(f"doc_index {doc_index} out of range for {model.num_docs} docs")
    return model.theta[doc_index].copy()


def top_words(model: LdaModel, topic: int, n: int) -> list[str]:
    """The n highest-weight terms of a topic, ties by term index."""
    if not 0 <= topic < model.k:
        raise LdaError(f"topic {topic} out of range for k={model.k}")
    row = model.phi[topic]
    order = np.lexsort((np.arange(row.shape[0]), -row))
    return [model.terms[i] for i in order[: max(0, min(n, row.shape[0]))]]


def log_likelihood(model: LdaModel, corpus: Corpus) -> float:
    """Token log likelihood under the mixed theta/phi estimates."""
    if len(corpus.vocabulary) != model.vocab_size:
        raise LdaError(
            f"vocabulary size {len(corpus.vocabulary)} does not match "
            f"model vocabulary {model.vocab_size}"
        )
    if len(corpus.docs) != model.num_docs:
        raise LdaError(
            f"corpus has {len(corpus.docs)} docs, model was trained on "
            f"{model.num_docs}"
        )
    total = 0.0
    for d, bow in enumerate(corpus.bows()):
        theta_d = model.theta[d]
        for term_idx, count in bow:
            total += count * float(np.log(theta_d @ model.phi[:, term_idx]))
    return total
