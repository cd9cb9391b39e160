"""Synthetic cyclic targets, IDX parsing and cyclic-MNIST preprocessing."""
import math
import struct
from dataclasses import dataclass

import numpy as np

from ._rng import as_generator

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801
SIDE = 28


# targets --------------------------------------------------------------------

_DEGREE = {"lin": 1, "quad": 2, "cube": 3}


@dataclass(frozen=True)
class TargetSpec:
    """Cyclic polynomial ``c * d^{-1/2} sum_i x_i x_{i+1} ... x_{i+k-1}`` (indices mod d).

    ``kind`` is ``lin``, ``quad``, ``cube`` or ``monomial`` (with ``degree``).
    With ``unit_norm`` the constant ``c`` makes ``||f||_{L^2} = 1`` exactly on
    the given domain; otherwise ``c = 1``.  On the hypercube both agree.  On
    the sphere the raw degree-``k`` sum has squared norm
    ``d^{k-1} / ((d+2)(d+4)...(d+2k-2))``.
    """

    kind: str
    d: int
    domain: str = "sphere"
    degree: int = 0
    unit_norm: bool = True

    def __post_init__(self):
        if self.kind in _DEGREE:
            object.__setattr__(self, "degree", _DEGREE[self.kind])
        elif self.kind != "monomial":
            raise ValueError(f"unknown target kind {self.kind!r}")
        if not 1 <= self.degree <= self.d:
            raise ValueError("target degree must lie in 1..d")

    @property
    def raw_norm_sq(self):
        if self.domain == "hypercube":
            return 1.0
        k, d = self.degree, self.d
        return d ** (k - 1) / math.prod(d + 2 * j for j in range(1, k))

    @property
    def scale(self):
        return 1.0 / math.sqrt(self.raw_norm_sq) if self.unit_norm else 1.0

    def __call__(self, X):
        return eval_target(self, X)

    def to_dict(self):
        return {"kind": self.kind, "d": self.d, "domain": self.domain, "degree": self.degree, "unit_norm": self.unit_norm}


def eval_target(spec: TargetSpec, X):
    X = np.asarray(X, dtype=float)
    if X.shape[-1] != spec.d:
        raise ValueError(f"target expects dimension {spec.d}, got {X.shape[-1]}")
    prod = np.ones_like(X)
    for j in range(spec.degree):
        prod = prod * np.roll(X, -j, axis=-1)
    return spec.scale * prod.sum(-1) / math.sqrt(spec.d)


# IDX files --------------------------------------------------------------------

class IdxError(ValueError):
    pass


class IdxMagicError(IdxError):
    pass


class IdxTruncatedError(IdxError):
    pass


class IdxShapeError(IdxError):
    pass


def load_idx(path, expect=None):
    """Read an unsigned-byte IDX file (images ``0x803`` or labels ``0x801``).

    ``expect`` may be ``"images"`` or ``"labels"`` to pin the magic number.
    """
    with open(path, "rb") as f:
        raw = f.read()
    if len(raw) < 8:
        raise IdxTruncatedError(f"{path}: header truncated")
    (magic,) = struct.unpack(">I", raw[:4])
    allowed = {"images": (IMAGE_MAGIC,), "labels": (LABEL_MAGIC,), None: (IMAGE_MAGIC, LABEL_MAGIC)}[expect]
    if magic not in allowed:
        raise IdxMagicError(f"{path}: wrong magic 0x{magic:08x}")
    ndim = 3 if magic == IMAGE_MAGIC else 1
    hdr = 4 + 4 * ndim
    if len(raw) < hdr:
        raise IdxTruncatedError(f"{path}: header truncated")
    dims = struct.unpack(">" + "I" * ndim, raw[4:hdr])
    count = math.prod(dims)
    payload = raw[hdr:]
    if len(payload) < count:
        raise IdxTruncatedError(f"{path}: expected {count} bytes of data, found {len(payload)}")
    if len(payload) > count:
        raise IdxShapeError(f"{path}: {len(payload) - count} trailing bytes beyond dims {dims}")
    return np.frombuffer(payload, dtype=np.uint8).reshape(dims).copy()


def write_idx(path, array):
    """Write a uint8 array as IDX (3-D -> images, 1-D -> labels)."""
    a = np.asarray(array)
    if a.dtype != np.uint8:
        raise IdxError("IDX writer only supports uint8 data")
    if a.ndim == 3:
        magic = IMAGE_MAGIC
    elif a.ndim == 1:
        magic = LABEL_MAGIC
    else:
        raise IdxShapeError("IDX writer expects a 3-D image stack or a label vector")
    with open(path, "wb") as f:
        f.write(struct.pack(">I", magic))
        f.write(struct.pack(">" + "I" * a.ndim, *a.shape))
        f.write(np.ascontiguousarray(a).tobytes())


# labels -----------------------------------------------------------------------

LABEL_SET = np.arange(10) - 4.5


def encode_labels(digits):
    return np.asarray(digits, dtype=float) - 4.5


def decode_predictions(pred):
    """Round regression outputs to the nearest member of ``{-4.5, ..., 4.5}``."""
    idx = np.clip(np.floor(np.asarray(pred) + 5.0), 0, 9)
    return idx.astype(int)


def classification_error(pred, digits):
    return float(np.mean(decode_predictions(pred) != np.asarray(digits)))


# frequency projection ------------------------------------------------------------

def _partner(i, j, n=SIDE):
    return (-i) % n, (-j) % n


def select_frequencies(train_images, T):
    """Top-``T`` DFT frequencies by mean modulus, closed under conjugation.

    Frequencies are ranked by the training-set mean of ``|F|``.  When the
    cut would split a conjugate pair, the missing partner is pulled in and the
    lowest-ranked unpaired frequency dropped, so the set keeps size ``T``
    (``T`` odd sets always contain at least one self-conjugate frequency).
    Returns a boolean ``28 x 28`` mask.
    """
    imgs = _as_stack(train_images)
    if not 1 <= T <= SIDE * SIDE:
        raise ValueError("T must lie in 1..784")
    score = np.abs(np.fft.fft2(imgs)).mean(0)
    order = sorted(((-score[i, j], i, j) for i in range(SIDE) for j in range(SIDE)))
    ranked = [(i, j) for _, i, j in order]
    # build the set pair by pair: each step takes the best remaining frequency with its partner
    chosen = []
    taken = set()
    for f in ranked:
        if f in taken:
            continue
        p = _partner(*f)
        unit = [f] if p == f else [f, p]
        if len(chosen) + len(unit) > T:
            continue
        chosen.extend(unit)
        taken.update(unit)
        if len(chosen) == T:
            break
    mask = np.zeros((SIDE, SIDE), dtype=bool)
    for i, j in chosen:
        mask[i, j] = True
    return mask


def _as_stack(images):
    a = np.asarray(images, dtype=float)
    if a.ndim == 2:
        a = a[None]
    if a.shape[-2:] != (SIDE, SIDE):
        raise ValueError(f"expected {SIDE}x{SIDE} images, got {a.shape[-2:]}")
    return a


def project_images(images, mask, normalize=True):
    """Zero the DFT outside ``mask`` and return real images.

    Also returns the largest imaginary residue before taking the real part.
    """
    a = _as_stack(images)
    F = np.fft.fft2(a)
    out = np.fft.ifft2(F * mask)
    residue = float(np.abs(out.imag).max()) if out.size else 0.0
    real = out.real
    if normalize:
        norms = np.linalg.norm(real.reshape(len(real), -1), axis=1)
        norms[norms == 0] = 1.0
        real = real / norms[:, None, None]
    return real, residue


def dft_project(images, T, train_images=None, normalize=True):
    """Project onto the top-``T`` frequencies of ``train_images`` (default: ``images``).

    Returns ``(projected, mask)``.
    """
    mask = select_frequencies(images if train_images is None else train_images, T)
    projected, _ = project_images(images, mask, normalize)
    return projected, mask


def random_cyclic_shift(images, seed=0, shifts=None):
    """Apply an independent uniform 2-D cyclic shift to every image.

    Returns ``(shifted, shifts)``; ``shifts`` may be passed in to force them.
    """
    a = _as_stack(images)
    if shifts is None:
        shifts = as_generator(seed, "mnist.shift").integers(0, SIDE, size=(len(a), 2))
    shifts = np.asarray(shifts, dtype=int).reshape(len(a), 2)
    out = np.empty_like(a)
    for n, (i, j) in enumerate(shifts):
        out[n] = np.roll(a[n], (-i, -j), axis=(0, 1))
    return out, shifts


@dataclass(frozen=True)
class MnistConfig:
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    T: int = 784
    n_train: int = 2000
    n_test: int = 2000
    seed: int = 0


def prepare_cyclic_mnist(cfg: MnistConfig):
    """Full preprocessing: subset, frequency projection, normalisation, random shift.

    Returns ``(X_train, digits_train, X_test, digits_test, mask)`` with images
    flattened to rows of length 784 and unit Euclidean norm.
    """
    Xtr = load_idx(cfg.train_images, "images")
    ytr = load_idx(cfg.train_labels, "labels")
    Xte = load_idx(cfg.test_images, "images")
    yte = load_idx(cfg.test_labels, "labels")
    if len(Xtr) != len(ytr) or len(Xte) != len(yte):
        raise IdxShapeError("image and label counts disagree")
    if cfg.n_train > len(Xtr) or cfg.n_test > len(Xte):
        raise ValueError("requested subset larger than the data set")
    rng = as_generator(cfg.seed, "mnist.subset")
    itr = np.sort(rng.choice(len(Xtr), cfg.n_train, replace=False))
    ite = np.sort(rng.choice(len(Xte), cfg.n_test, replace=False))
    Xtr, ytr, Xte, yte = Xtr[itr] / 255.0, ytr[itr], Xte[ite] / 255.0, yte[ite]
    mask = select_frequencies(Xtr, cfg.T)
    Ptr, _ = project_images(Xtr, mask)
    Pte, _ = project_images(Xte, mask)
    Str, _ = random_cyclic_shift(Ptr, as_generator(cfg.seed, "mnist.shift.train"))
    Ste, _ = random_cyclic_shift(Pte, as_generator(cfg.seed, "mnist.shift.test"))
    return Str.reshape(len(Str), -1), ytr.astype(int), Ste.reshape(len(Ste), -1), yte.astype(int), mask
