from autodiff.gradcheck import analytic_grads, grad_check
from autodiff.params import ParameterStore
from autodiff.tape import OPS, Record, Tape, Tensor

__all__ = ["OPS", "ParameterStore", "Record", "Tape", "Tensor", "analytic_grads", "grad_check"]
