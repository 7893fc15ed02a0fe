"""Dense tensors with tape-recorded reverse-mode differentiation."""

import threading
from contextlib import contextmanager
from typing import Callable, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from maskface_utils.exceptions import DimensionError, GraphError, NumericalError

FLOAT_TYPES = (np.float32, np.float64)

_local = threading.local()


def get_default_dtype() -> type:
    """Floating point type used for newly created tensors in this thread."""
    return getattr(_local, "dtype", np.float32)


@contextmanager
def precision(dtype) -> Iterator[None]:
    """
    Temporarily switch the default tensor dtype for the current thread.

    Training runs in float32; gradient checks run under ``precision(np.float64)``.
    """
    dtype = np.dtype(dtype).type
    if dtype not in FLOAT_TYPES:
        raise ValueError(f"Unsupported precision: {dtype}")
    previous = get_default_dtype()
    _local.dtype = dtype
    try:
        yield
    finally:
        _local.dtype = previous


def _tape_stack() -> List["Tape"]:
    stack = getattr(_local, "tapes", None)
    if stack is None:
        stack = []
        _local.tapes = stack
    return stack


def current_tape() -> Optional["Tape"]:
    """Innermost active tape of this thread, or None when nothing is recorded."""
    stack = _tape_stack()
    return stack[-1] if stack else None


class Tensor:
    """Dense row-major float array with an optional gradient."""

    __array_priority__ = 1000

    def __init__(self, data, requires_grad: bool = False, dtype=None):
        self.data = np.array(data, dtype=dtype or get_default_dtype())
        self.grad: Optional[np.ndarray] = None
        self.requires_grad = requires_grad
        self._node: Optional["Node"] = None

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        tensor = cls.__new__(Tensor)
        tensor.data = array
        tensor.grad = None
        tensor.requires_grad = False
        tensor._node = None
        return tensor

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self._node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise DimensionError(f"item() needs a single-element tensor, got shape {self.shape}")
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        self.grad = None

    def detach(self) -> "Tensor":
        return Tensor._wrap(self.data)

    def __add__(self, other):
        from maskface_utils.tensor import ops
        return ops.add(self, _as_tensor(other, self))

    def __radd__(self, other):
        from maskface_utils.tensor import ops
        return ops.add(_as_tensor(other, self), self)

    def __mul__(self, other):
        from maskface_utils.tensor import ops
        return ops.mul(self, _as_tensor(other, self))

    def __rmul__(self, other):
        from maskface_utils.tensor import ops
        return ops.mul(_as_tensor(other, self), self)

    def sum(self) -> "Tensor":
        from maskface_utils.tensor import ops
        return ops.sum(self)

    def __repr__(self) -> str:
        flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{flag})"


class Parameter(Tensor):
    """Learnable leaf tensor; always requires a gradient."""

    def __init__(self, data, dtype=None):
        super().__init__(data, requires_grad=True, dtype=dtype)

    def __repr__(self) -> str:
        return f"Parameter(shape={self.shape}, dtype={self.dtype})"


def _as_tensor(value, like: Tensor) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor._wrap(np.full(like.shape, value, dtype=like.dtype))


BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Node:
    """One executed operation: its inputs, its output and its vector-Jacobian product."""

    __slots__ = ("op", "inputs", "output", "backward")

    def __init__(self, op: str, inputs: Sequence[Tensor], output: Tensor, backward: BackwardFn):
        self.op = op
        self.inputs = tuple(inputs)
        self.output = output
        self.backward = backward

    def __repr__(self) -> str:
        return f"Node({self.op}, out={self.output.shape})"


class Tape:
    """
    Ordered record of operations executed while the tape is active.

    Operations are appended as they run, so every node follows the producers of its
    inputs. Use as a context manager; tapes are confined to the creating thread.
    """

    def __init__(self):
        self._nodes: List[Node] = []
        self._ids = set()

    def record(self, node: Node) -> None:
        self._nodes.append(node)
        self._ids.add(id(node))

    def produced(self, tensor: Tensor) -> bool:
        """True if the tensor's producing operation is on this tape."""
        return tensor._node is not None and id(tensor._node) in self._ids

    @property
    def nodes(self) -> Tuple[Node, ...]:
        return tuple(self._nodes)

    def __len__(self) -> int:
        return len(self._nodes)

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if stack and stack[-1] is self:
            stack.pop()


def check_finite(array: np.ndarray, op: str, what: str = "output") -> None:
    if not np.all(np.isfinite(array)):
        raise NumericalError(f"{op} produced non-finite {what}")


def apply(op: str, inputs: Sequence[Tensor], out: np.ndarray, backward: BackwardFn) -> Tensor:
    """
    Wrap a forward result and record it on the active tape.

    ``backward`` maps the output gradient to one gradient (or None) per input.
    Nothing is recorded when no tape is active or no input requires a gradient.
    """
    check_finite(out, op)
    result = Tensor._wrap(out)
    tape = current_tape()
    if tape is not None and any(t.requires_grad for t in inputs):
        result.requires_grad = True
        node = Node(op, inputs, result, backward)
        result._node = node
        tape.record(node)
    return result


def backward(loss: Tensor, tape: Tape) -> List[Tensor]:
    """
    Accumulate dLoss/dT into ``grad`` of every leaf tensor that requires a gradient.

    Gradients add onto whatever is already stored; call ``zero_grad`` between steps.

    Returns:
        Leaf tensors whose gradients were updated, in first-touched order

    Raises:
        DimensionError: If loss is not a scalar
        GraphError: If loss was not produced by an operation on this tape
    """
    if loss.size != 1:
        raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
    if not tape.produced(loss):
        raise GraphError("loss was not produced by an operation recorded on this tape")

    pending = {id(loss): np.ones_like(loss.data)}
    touched: List[Tensor] = []
    seen = set()
    for node in reversed(tape.nodes):
        grad_out = pending.pop(id(node.output), None)
        if grad_out is None:
            continue
        grads = node.backward(grad_out)
        for tensor, grad in zip(node.inputs, grads):
            if grad is None or not tensor.requires_grad:
                continue
            check_finite(grad, node.op, "gradient")
            if tensor.shape != grad.shape:
                raise GraphError(
                    f"{node.op} returned gradient of shape {grad.shape} for input {tensor.shape}"
                )
            if tensor.is_leaf:
                if tensor.grad is None:
                    tensor.grad = np.array(grad, dtype=tensor.dtype)
                else:
                    tensor.grad = tensor.grad + grad
                if id(tensor) not in seen:
                    seen.add(id(tensor))
                    touched.append(tensor)
            elif tape.produced(tensor):
                key = id(tensor)
                pending[key] = grad if key not in pending else pending[key] + grad
    return touched
