"""Complex-to-real embedding with the fixed ``[Re; Im]`` layout."""

from __future__ import annotations

from typing import List, Optional, Sequence, Tuple

import numpy as np

from .program import ConicError, VariableLayout

__all__ = ["ComplexEmbedding", "embed_complex", "functional_rows"]


def functional_rows(h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Rows ``(re, im)`` over ``[Re w; Im w]`` such that ``h^H w = re.x + j im.x``.

    With ``h = c + j d`` and ``w = a + j b``: ``h^H w = (c.a + d.b) + j (c.b - d.a)``.
    """
    h = np.asarray(h, dtype=complex)
    c, d = h.real, h.imag
    return np.concatenate([c, d]), np.concatenate([-d, c])


class ComplexEmbedding:
    """Real layout for a list of complex vectors plus linear adapters."""

    def __init__(self, sizes: Sequence[int], names: Optional[Sequence[str]] = None,
                 layout: Optional[VariableLayout] = None):
        self.layout = VariableLayout() if layout is None else layout
        if names is None:
            names = [f"w{k + 1}" for k in range(len(sizes))]
        if len(names) != len(sizes):
            raise ConicError("one name per complex vector required")
        self.names = list(names)
        for name, n in zip(self.names, sizes):
            self.layout.add_complex(name, n)

    @property
    def size(self) -> int:
        return self.layout.size

    def to_real(self, vectors: Sequence[np.ndarray], x: Optional[np.ndarray] = None) -> np.ndarray:
        x = np.zeros(self.layout.size) if x is None else x
        for name, v in zip(self.names, vectors):
            v = np.asarray(v, dtype=complex)
            s = self.layout.slice(name)
            n = self.layout.complex_size(name)
            if v.shape != (n,):
                raise ConicError(f"{name}: expected length {n}, got {v.shape}")
            x[s.start : s.start + n] = v.real
            x[s.start + n : s.stop] = v.imag
        return x

    def from_real(self, x: np.ndarray) -> List[np.ndarray]:
        out = []
        for name in self.names:
            s = self.layout.slice(name)
            n = self.layout.complex_size(name)
            out.append(x[s.start : s.start + n] + 1j * x[s.start + n : s.stop])
        return out

    def rows(self, name: str, h: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Full-length real rows for ``h^H w_name`` (real part, imaginary part)."""
        s = self.layout.slice(name)
        re_part, im_part = functional_rows(h)
        if re_part.size != s.stop - s.start:
            raise ConicError(f"{name}: functional length mismatch")
        r_re = np.zeros(self.layout.size)
        r_im = np.zeros(self.layout.size)
        r_re[s] = re_part
        r_im[s] = im_part
        return r_re, r_im


def embed_complex(vectors: Sequence[np.ndarray], names: Optional[Sequence[str]] = None,
                  layout: Optional[VariableLayout] = None) -> Tuple[ComplexEmbedding, np.ndarray]:
    """Embed ``vectors`` into one real vector; returns ``(embedding, x)``."""
    vectors = [np.atleast_1d(np.asarray(v, dtype=complex)) for v in vectors]
    emb = ComplexEmbedding([v.size for v in vectors], names, layout)
    return emb, emb.to_real(vectors)
