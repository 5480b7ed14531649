"""Exception types shared across the package."""


class DegenerateStencilError(RuntimeError):
    """A derivative stencil cannot support the requested polynomial fit."""

    def __init__(self, node: int, reason: str):
        self.node = node
        super().__init__(f"degenerate stencil at node {node}: {reason}")


class NonConvergenceError(RuntimeError):
    """Damped Newton failed; carries diagnostics and any partial results."""

    def __init__(self, message: str, *, iterations: int = 0,
                 residual_sup: float = float("nan"), step: float = float("nan"),
                 eps: float | None = None, partial_report=None):
        self.iterations = iterations
        self.residual_sup = residual_sup
        self.step = step
        self.eps = eps
        self.partial_report = partial_report
        detail = f" (iterations={iterations}, sup|G|={residual_sup:.3e}, step={step:.3e}"
        if eps is not None:
            detail += f", eps={eps:.3e}"
        super().__init__(message + detail + ")")
