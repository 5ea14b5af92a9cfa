# autodiff/params.py
from __future__ import annotations

from typing import Iterator, Mapping

import numpy as np

from autodiff.tape import Tensor
from errors import StructuralError


class ParameterStore:
    """
    Named learnable tensors.

    Names are unique and iteration is lexicographic. Tensors are never
    mutated; ``set`` swaps in a fresh read-only tensor.
    """

    def __init__(self, arrays: Mapping[str, np.ndarray] | None = None):
        self._params: dict[str, Tensor] = {}
        for name, value in (arrays or {}).items():
            self.add(name, value)

    def add(self, name: str, value) -> Tensor:
        if name in self._params:
            raise StructuralError(f"duplicate parameter name {name!r}")
        t = Tensor(value, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def set(self, name: str, value) -> None:
        old = self._params.get(name)
        if old is None:
            raise StructuralError(f"unknown parameter {name!r}")
        new = Tensor(value, requires_grad=True, name=name)
        if new.shape != old.shape:
            raise StructuralError(f"{name}: shape {new.shape} != {old.shape}")
        self._params[name] = new

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[str]:
        return iter(self.names())

    def names(self) -> list[str]:
        return sorted(self._params)

    def items(self) -> list[tuple[str, Tensor]]:
        return [(name, self._params[name]) for name in self.names()]

    def array(self, name: str) -> np.ndarray:
        return self._params[name].data

    def as_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data.copy() for name, t in self.items()}

    def copy(self) -> "ParameterStore":
        return ParameterStore(self.as_arrays())

    def num_parameters(self) -> int:
        return int(sum(t.data.size for t in self._params.values()))
