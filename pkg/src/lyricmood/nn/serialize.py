"""Text persistence for the neural classifiers.

The container stores the architecture config plus every tensor (including
batchnorm running statistics) with 17 significant digits, which
round-trips IEEE doubles exactly: a loaded model predicts bit-for-bit
like the saved one.
"""

import json

import numpy as np

from ..errors import ParseError
from .models import ARCHITECTURES

FORMAT_TAG = "lyricmood-nn v1"


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(FORMAT_TAG + "\n")
        fh.write(f"arch {model.arch}\n")
        fh.write("config " + json.dumps(model.config(), sort_keys=True) + "\n")
        state = model.state_tensors()
        fh.write(f"tensors {len(state)}\n")
        for name, tensor in state.items():
            dims = " ".join(str(d) for d in tensor.shape)
            fh.write(f"tensor {name} {tensor.ndim} {dims}\n")
            flat = np.asarray(tensor, dtype=np.float64).reshape(-1)
            fh.write(" ".join(f"{v:.17g}" for v in flat) + "\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != FORMAT_TAG:
        raise ParseError(f"not a {FORMAT_TAG} file", line=1)
    if len(lines) < 4 or not lines[1].startswith("arch "):
        raise ParseError("missing arch line", line=2)
    arch = lines[1].split(" ", 1)[1]
    if arch not in ARCHITECTURES:
        raise ParseError(f"unknown architecture {arch!r}", line=2)
    if not lines[2].startswith("config "):
        raise ParseError("missing config line", line=3)
    cfg = json.loads(lines[2].split(" ", 1)[1])
    model = ARCHITECTURES[arch].from_config(cfg)

    if not lines[3].startswith("tensors "):
        raise ParseError("missing tensor count", line=4)
    n_tensors = int(lines[3].split()[1])
    state = {}
    ln = 4
    for _ in range(n_tensors):
        if ln + 1 >= len(lines) + 1:
            raise ParseError("truncated tensor section", line=ln + 1)
        header = lines[ln].split()
        if header[0] != "tensor" or len(header) < 3:
            raise ParseError(f"bad tensor header {lines[ln]!r}", line=ln + 1)
        name = header[1]
        ndim = int(header[2])
        shape = tuple(int(d) for d in header[3 : 3 + ndim])
        try:
            values = np.array(lines[ln + 1].split(), dtype=np.float64)
        except ValueError:
            raise ParseError(f"bad values for tensor {name}", line=ln + 2) from None
        if values.size != int(np.prod(shape)):
            raise ParseError(
                f"tensor {name}: {values.size} values for shape {shape}", line=ln + 2
            )
        state[name] = values.reshape(shape)
        ln += 2
    model.load_state_tensors(state)
    return model
