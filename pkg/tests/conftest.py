import numpy as np
import pytest

from refless.vectors import EmbeddingSpace


def make_space(tokens, vectors, idf=None, doc_count=0):
    vectors = np.asarray(vectors, dtype=np.float64)
    return EmbeddingSpace(
        dimension=vectors.shape[1],
        vocabulary={t: vectors[i] for i, t in enumerate(tokens)},
        idf=idf or {},
        corpus_doc_count=doc_count,
    )


def random_orthogonal(rng, d):
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
