"""Differentiable building blocks (float64 torch), gradient checking and checkpoint I/O."""

from __future__ import annotations

import hashlib
import io
import json
import math
import struct
from typing import Callable, Iterable, Mapping, Optional, Sequence

import numpy as np
import torch
from torch import nn

DTYPE = torch.float64


def seed_everything(seed: int) -> torch.Generator:
    torch.manual_seed(seed)
    return torch.Generator().manual_seed(seed)


def xavier_(module: nn.Module) -> None:
    """Xavier-uniform matrices, zero biases, U(-0.1, 0.1) embeddings."""
    embeddings = {id(m.weight) for m in module.modules() if isinstance(m, nn.Embedding)}
    for name, p in module.named_parameters():
        if id(p) in embeddings:
            nn.init.uniform_(p, -0.1, 0.1)
            continue
        if p.dim() >= 2:
            nn.init.xavier_uniform_(p)
        elif "bias" in name:
            nn.init.zeros_(p)


class LstmCell(nn.Module):
    """One LSTM step with gates stacked as input, forget, candidate, output."""

    def __init__(self, input_size: int, hidden_size: int):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.weight_ih = nn.Parameter(torch.empty(4 * hidden_size, input_size, dtype=DTYPE))
        self.weight_hh = nn.Parameter(torch.empty(4 * hidden_size, hidden_size, dtype=DTYPE))
        self.bias = nn.Parameter(torch.zeros(4 * hidden_size, dtype=DTYPE))
        nn.init.xavier_uniform_(self.weight_ih)
        nn.init.xavier_uniform_(self.weight_hh)

    def forward(self, x: torch.Tensor, state: Optional[tuple[torch.Tensor, torch.Tensor]] = None):
        if x.shape[-1] != self.input_size:
            raise ValueError(f"expected input of size {self.input_size}, got {x.shape[-1]}")
        if state is None:
            zero = x.new_zeros(x.shape[:-1] + (self.hidden_size,))
            state = (zero, zero)
        h, c = state
        gates = x @ self.weight_ih.T + h @ self.weight_hh.T + self.bias
        i, f, g, o = gates.chunk(4, dim=-1)
        c = torch.sigmoid(f) * c + torch.sigmoid(i) * torch.tanh(g)
        h = torch.sigmoid(o) * torch.tanh(c)
        return h, c


class BiLstm(nn.Module):
    """Stacked bidirectional LSTM over one sequence; output i = [forward_i; backward_i]."""

    def __init__(self, input_size: int, hidden_size: int, num_layers: int = 1):
        super().__init__()
        self.input_size = input_size
        self.hidden_size = hidden_size
        self.lstm = nn.LSTM(input_size, hidden_size, num_layers=num_layers,
                            bidirectional=True, dtype=DTYPE)

    @property
    def output_size(self) -> int:
        return 2 * self.hidden_size

    def forward(self, inputs: torch.Tensor) -> torch.Tensor:
        if inputs.dim() != 2 or inputs.shape[0] == 0 or inputs.shape[1] != self.input_size:
            raise ValueError(f"expected a non-empty (len, {self.input_size}) sequence, got {tuple(inputs.shape)}")
        out, _ = self.lstm(inputs.unsqueeze(1))
        return out.squeeze(1)


def bilstm_encode(bilstm: BiLstm, inputs: Sequence[torch.Tensor] | torch.Tensor) -> torch.Tensor:
    if not isinstance(inputs, torch.Tensor):
        if not inputs:
            raise ValueError("empty input sequence")
        inputs = torch.stack(list(inputs))
    return bilstm(inputs)


class Mlp(nn.Module):
    """One tanh hidden layer and a linear output layer producing raw scores."""

    def __init__(self, input_size: int, hidden_size: int, output_size: int):
        super().__init__()
        self.input_size = input_size
        self.hidden = nn.Linear(input_size, hidden_size, dtype=DTYPE)
        self.out = nn.Linear(hidden_size, output_size, dtype=DTYPE)

    def forward(self, features: torch.Tensor) -> torch.Tensor:
        if features.shape[-1] != self.input_size:
            raise ValueError(f"expected {self.input_size} features, got {features.shape[-1]}")
        return self.out(torch.tanh(self.hidden(features)))


def mlp_score(mlp: Mlp, features: torch.Tensor) -> torch.Tensor:
    return mlp(features)


def softmax(logits: torch.Tensor) -> torch.Tensor:
    return torch.softmax(logits, dim=-1)


def cross_entropy(logits: torch.Tensor, gold: torch.Tensor) -> torch.Tensor:
    """Summed negative log-likelihood of the gold indices."""
    return nn.functional.cross_entropy(logits, gold, reduction="sum")


def adam(params: Iterable[torch.Tensor], lr: float = 1e-3) -> torch.optim.Adam:
    return torch.optim.Adam(params, lr=lr, betas=(0.9, 0.999), eps=1e-8, fused=True)


def grad_check(f: Callable[[], torch.Tensor], params: Sequence[torch.Tensor], eps: float = 1e-6,
               samples: Optional[int] = None, generator: Optional[torch.Generator] = None) -> float:
    """Max over checked coordinates of |analytic - central difference| / max(1, |analytic|).

    ``f`` re-evaluates a scalar from the current parameter values. With ``samples``
    set, that many random coordinates per tensor are checked instead of all of them.
    """
    for p in params:
        p.grad = None
    with torch.enable_grad():
        loss = f()
        analytic = torch.autograd.grad(loss, list(params), allow_unused=True)
    worst = 0.0
    with torch.no_grad():
        for p, g in zip(params, analytic):
            g = torch.zeros_like(p) if g is None else g
            flat = p.view(-1)
            gflat = g.reshape(-1)
            if samples is None or samples >= flat.numel():
                coords = range(flat.numel())
            else:
                coords = torch.randperm(flat.numel(), generator=generator)[:samples].tolist()
            for k in coords:
                orig = flat[k].item()
                flat[k] = orig + eps
                up = f().item()
                flat[k] = orig - eps
                down = f().item()
                flat[k] = orig
                numeric = (up - down) / (2 * eps)
                a = gflat[k].item()
                worst = max(worst, abs(a - numeric) / max(1.0, abs(a)))
    return worst


# Checkpoint container
# --------------------
# MAGIC, then a little-endian uint64 header length, then a UTF-8 JSON header
# {"format": 1, "meta": {...}, "tensors": [{"name", "shape", "offset"}, ...]} with sorted keys,
# then the tensors as contiguous little-endian float64 in header order.

MAGIC = b"NUCPARSE-CKPT\n"
FORMAT_VERSION = 1


def save_checkpoint(path, tensors: Mapping[str, torch.Tensor | np.ndarray], meta: Mapping) -> str:
    """Write tensors and JSON-able metadata; returns the file's sha256."""
    names = sorted(tensors)
    arrays = []
    index = []
    offset = 0
    for name in names:
        t = tensors[name]
        arr = t.detach().cpu().numpy() if isinstance(t, torch.Tensor) else np.asarray(t)
        # ascontiguousarray promotes 0-d arrays to 1-d, so restore the shape
        arr = np.ascontiguousarray(arr, dtype="<f8").reshape(np.shape(arr))
        index.append({"name": name, "shape": list(arr.shape), "offset": offset})
        offset += arr.nbytes
        arrays.append(arr)
    header = json.dumps({"format": FORMAT_VERSION, "meta": meta, "tensors": index},
                        sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<Q", len(header)))
    buf.write(header)
    for arr in arrays:
        buf.write(arr.tobytes())
    data = buf.getvalue()
    with open(path, "wb") as f:
        f.write(data)
    return hashlib.sha256(data).hexdigest()


def load_checkpoint(path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a checkpoint file")
    pos = len(MAGIC)
    (hlen,) = struct.unpack_from("<Q", data, pos)
    pos += 8
    header = json.loads(data[pos:pos + hlen].decode("utf-8"))
    if header.get("format") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint format {header.get('format')}")
    base = pos + hlen
    tensors = {}
    for entry in header["tensors"]:
        count = math.prod(entry["shape"])
        start = base + entry["offset"]
        arr = np.frombuffer(data, dtype="<f8", count=count, offset=start)
        tensors[entry["name"]] = arr.reshape(tuple(entry["shape"])).copy()
    return tensors, header["meta"]


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()
