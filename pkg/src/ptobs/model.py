"""Nonlinear triangular plants driven by an input u(t) and a disturbance d(t)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Expr, Program, compile_expr, format_expr, parse_expr, variables


class ModelError(ValueError):
    pass


class TriangularityError(ModelError):
    pass


class DimensionError(ModelError):
    pass


def state_names(n: int) -> list[str]:
    return [f"x{i}" for i in range(1, n + 1)]


def _as_expr(e, allowed) -> Expr:
    if isinstance(e, str):
        return parse_expr(e, allowed)
    return e


@dataclass(frozen=True)
class TriangularSystem:
    """Plant of the form

        x_i' = x_{i+1} + f_i(x_1..x_i, u)     i < n
        x_n' = f_n(x_1..x_n, u) + d(t)
        y    = x_1

    ``f0`` is the nominal model of ``f_n`` that an observer is allowed to use.
    Expressions may be given as text or as parsed ASTs.
    """

    n: int
    f: tuple
    f0: Expr
    u_signal: Expr
    d_signal: Expr
    _progs: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        n = self.n
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise DimensionError(f"state dimension must be a positive integer, got {n!r}")
        if len(self.f) != n:
            raise DimensionError(f"expected {n} nonlinearities f1..f{n}, got {len(self.f)}")
        names = state_names(n)
        full = set(names) | {"u"}
        fs = tuple(_as_expr(e, full) for e in self.f)
        f0 = _as_expr(self.f0, full)
        u_sig = _as_expr(self.u_signal, {"t"})
        d_sig = _as_expr(self.d_signal, {"t"})

        for i, fi in enumerate(fs, start=1):
            bad = sorted(variables(fi) - set(names[:i]) - {"u"}, key=_var_order)
            if bad:
                raise TriangularityError(
                    f"f{i} may only use x1..x{i} and u, but references {', '.join(bad)}"
                )
        bad = sorted(variables(f0) - full, key=_var_order)
        if bad:
            raise ModelError(f"f0 references unknown variables {', '.join(bad)}")
        for label, sig in (("u", u_sig), ("d", d_sig)):
            bad = sorted(variables(sig) - {"t"})
            if bad:
                raise ModelError(f"signal {label}(t) may only use t, found {', '.join(bad)}")

        object.__setattr__(self, "f", fs)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "u_signal", u_sig)
        object.__setattr__(self, "d_signal", d_sig)
        # f_i and f0 all read the slot vector (x1..xn, u)
        slots = names + ["u"]
        progs = tuple(compile_expr(fi, slots) for fi in fs)
        object.__setattr__(
            self,
            "_progs",
            (progs, compile_expr(f0, slots), compile_expr(u_sig, ["t"]), compile_expr(d_sig, ["t"])),
        )

    # compiled programs, in slot order (x1..xn, u)
    @property
    def f_programs(self) -> tuple[Program, ...]:
        return self._progs[0]

    @property
    def f0_program(self) -> Program:
        return self._progs[1]

    def u(self, t: float) -> float:
        return self._progs[2]((t,))

    def d(self, t: float) -> float:
        return self._progs[3]((t,))

    def fingerprint(self) -> str:
        """Canonical text identifying the plant, used to match comparable runs."""
        parts = [str(self.n)] + [format_expr(e) for e in self.f]
        parts += [format_expr(self.f0), format_expr(self.u_signal), format_expr(self.d_signal)]
        return ";".join(parts)


def _var_order(name):
    return (0, int(name[1:])) if name.startswith("x") and name[1:].isdigit() else (1, name)


def check_state(sys: TriangularSystem, x, dim: int | None = None) -> np.ndarray:
    """Validate a state vector (length and finiteness) and return it as an array."""
    dim = sys.n if dim is None else dim
    arr = np.asarray(x, dtype=float)
    if arr.shape != (dim,):
        raise DimensionError(f"state must have length {dim}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ModelError("state has non-finite entries")
    return arr


def plant_rhs_u(sys: TriangularSystem, x: Sequence[float], u: float, d: float) -> list[float]:
    """Plant derivative with the input and disturbance values already sampled."""
    n = sys.n
    slots = list(x[:n])
    slots.append(u)
    progs = sys.f_programs
    out = [x[i + 1] + progs[i](slots) for i in range(n - 1)]
    out.append(progs[n - 1](slots) + d)
    return out


def system_rhs(sys: TriangularSystem, x, t: float) -> np.ndarray:
    """Plant derivative at state ``x`` and time ``t``."""
    x = check_state(sys, x)
    return np.array(plant_rhs_u(sys, x.tolist(), sys.u(t), sys.d(t)))


def example1_system(l1: float = 1.0, l2: float = 0.02, d: str = "5*sin(2*t)") -> TriangularSystem:
    """Damped pendulum-like plant used in both shipped scenarios."""
    return TriangularSystem(
        n=2,
        f=(f"-{l1!r}*sin(x1)", f"-x1 - {l2!r}*x2^3 + u"),
        f0="0",
        u_signal="sin(0.35*t)",
        d_signal=d,
    )
