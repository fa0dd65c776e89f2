"""Pure-Python execution kernel for lowered MiniLang code.

This module and the compiled ``_ckernel`` extension expose the same
``execute`` entry point and must agree bit-for-bit on every result; see
``tests/test_kernels.py``. Opcodes are documented in ``lower.py``.
"""

import sys

# 256 MiniLang frames need several Python frames each
if sys.getrecursionlimit() < 20_000:
    sys.setrecursionlimit(20_000)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1
_WRAP = 2**64

PASS = "pass"
ASSERTION_FAILURE = "assertion_failure"
RUNTIME_ERROR = "runtime_error"
STEP_BUDGET_EXCEEDED = "step_budget_exceeded"


class KernelError(Exception):
    def __init__(self, kind, message, line, col):
        Exception.__init__(self, message)
        self.kind = kind
        self.message = message
        self.line = line
        self.col = col
        self.frames = []


def _wrap(v):
    if INT_MIN <= v <= INT_MAX:
        return v
    return (v - INT_MIN) % _WRAP + INT_MIN


def _tname(v):
    t = type(v)
    if t is int:
        return "int"
    if t is bool:
        return "bool"
    if t is str:
        return "string"
    return "unit"


def show(v):
    t = type(v)
    if t is bool:
        return "true" if v else "false"
    if t is int:
        return str(v)
    if t is str:
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    return "()"


class _Machine:
    __slots__ = ("funcs", "budget", "max_depth", "steps", "depth", "lines", "arms", "retval")

    def __init__(self, funcs, budget, max_depth):
        self.funcs = funcs
        self.budget = budget
        self.max_depth = max_depth
        self.steps = 0
        self.depth = 0
        self.lines = set()
        self.arms = set()
        self.retval = None

    def call(self, fn, args):
        params, body, name, _file = fn
        if len(args) != len(params):
            raise KernelError(RUNTIME_ERROR,
                              f"function {name} expects {len(params)} argument(s), got {len(args)}",
                              0, 0)
        if self.depth >= self.max_depth:
            raise KernelError(RUNTIME_ERROR,
                              f"call depth exceeded {self.max_depth} frames", 0, 0)
        self.depth += 1
        env = dict(zip(params, args))
        try:
            returned = self.block(body, env)
        except KernelError as e:
            e.frames.append((name, _file, e.line, e.col))
            self.depth -= 1
            raise
        self.depth -= 1
        if returned:
            v = self.retval
            self.retval = None
            return v
        return None

    def block(self, stmts, env):
        """Run ``stmts``; return True when a ``return`` statement fired."""
        for s in stmts:
            op = s[0]
            if self.steps >= self.budget:
                raise KernelError(STEP_BUDGET_EXCEEDED,
                                  f"step budget of {self.budget} statements exhausted",
                                  s[2], s[3])
            self.steps += 1
            self.lines.add(s[1])
            if op == 0 or op == 1:  # let / assign
                name = s[4]
                if op == 1 and name not in env:
                    raise KernelError(RUNTIME_ERROR, f"assignment to undeclared variable {name}",
                                      s[2], s[3])
                env[name] = self.eval(s[5], env)
            elif op == 5:  # expression statement
                self.eval(s[4], env)
            elif op == 2:  # if
                c = self.eval(s[4], env)
                if type(c) is not bool:
                    raise KernelError(RUNTIME_ERROR,
                                      f"if condition must be bool, got {_tname(c)}",
                                      s[2], s[3])
                if c:
                    self.arms.add(s[7] * 2)
                    if self.block(s[5], env):
                        return True
                else:
                    self.arms.add(s[7] * 2 + 1)
                    if self.block(s[6], env):
                        return True
            elif op == 3:  # while
                cond, body, bid = s[4], s[5], s[6]
                first = True
                while True:
                    if not first:
                        # each re-test of the loop condition costs one step
                        if self.steps >= self.budget:
                            raise KernelError(
                                STEP_BUDGET_EXCEEDED,
                                f"step budget of {self.budget} statements exhausted",
                                s[2], s[3])
                        self.steps += 1
                    first = False
                    c = self.eval(cond, env)
                    if type(c) is not bool:
                        raise KernelError(RUNTIME_ERROR,
                                          f"while condition must be bool, got {_tname(c)}",
                                          s[2], s[3])
                    if not c:
                        self.arms.add(bid * 2 + 1)
                        break
                    self.arms.add(bid * 2)
                    if self.block(body, env):
                        return True
            else:  # return
                e = s[4]
                self.retval = None if e is None else self.eval(e, env)
                return True
        return False

    def eval(self, e, env):
        op = e[0]
        if op == 1:  # var
            try:
                return env[e[1]]
            except KeyError:
                raise KernelError(RUNTIME_ERROR, f"undefined identifier {e[1]}",
                                  e[2], e[3]) from None
        if op == 0:
            return e[1]
        if op == 2:
            return self.binop(e[1], self.eval(e[2], env), self.eval(e[3], env), e[4], e[5])
        if op == 3 or op == 4:  # && / ||
            a = self.eval(e[1], env)
            if type(a) is not bool:
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {'&&' if op == 3 else '||'} needs bool operands, got {_tname(a)}",
                                  e[3], e[4])
            if op == 3 and not a:
                return False
            if op == 4 and a:
                return True
            b = self.eval(e[2], env)
            if type(b) is not bool:
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {'&&' if op == 3 else '||'} needs bool operands, got {_tname(b)}",
                                  e[3], e[4])
            return b
        if op == 7:  # user call
            fn = self.funcs.get(e[1])
            if fn is None:
                raise KernelError(RUNTIME_ERROR, f"undefined function {e[1]}", e[3], e[4])
            args = [self.eval(a, env) for a in e[2]]
            try:
                return self.call(fn, args)
            except KernelError as err:
                err.line = e[3]
                err.col = e[4]
                raise
        if op == 8:
            return self.builtin(e[1], [self.eval(a, env) for a in e[2]], e[3], e[4])
        if op == 5:
            v = self.eval(e[1], env)
            if type(v) is not bool:
                raise KernelError(RUNTIME_ERROR, f"operator ! needs bool, got {_tname(v)}",
                                  e[2], e[3])
            return not v
        # op == 6: negation
        v = self.eval(e[1], env)
        if type(v) is not int:
            raise KernelError(RUNTIME_ERROR, f"unary - needs int, got {_tname(v)}",
                              e[2], e[3])
        return _wrap(-v)

    def binop(self, code, a, b, line, col):
        if code >= 7 or code <= 4:
            if type(a) is not int or type(b) is not int:
                sym = ("+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=")[code]
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {sym} needs int operands, got {_tname(a)} and {_tname(b)}",
                                  line, col)
            if code == 0:
                return _wrap(a + b)
            if code == 1:
                return _wrap(a - b)
            if code == 2:
                return _wrap(a * b)
            if code == 3 or code == 4:
                if b == 0:
                    raise KernelError(RUNTIME_ERROR, "division by zero", line, col)
                q = abs(a) // abs(b)
                if (a < 0) != (b < 0):
                    q = -q
                if code == 3:
                    return _wrap(q)
                return a - b * q
            if code == 7:
                return a < b
            if code == 8:
                return a <= b
            if code == 9:
                return a > b
            return a >= b
        if type(a) is not type(b):
            sym = "==" if code == 5 else "!="
            raise KernelError(RUNTIME_ERROR,
                              f"operator {sym} compares {_tname(a)} with {_tname(b)}",
                              line, col)
        if code == 5:
            return a == b
        return a != b

    def builtin(self, code, args, line, col):
        n = len(args)
        if code == 0:
            if n != 2:
                raise KernelError(RUNTIME_ERROR, f"assert_eq expects 2 argument(s), got {n}",
                                  line, col)
            actual, expected = args
            if type(actual) is not type(expected) or actual != expected:
                raise KernelError(ASSERTION_FAILURE,
                                  f"assert_eq failed: expected {show(expected)}, actual {show(actual)}",
                                  line, col)
            return None
        if code == 1 or code == 2:
            fname = "assert_true" if code == 1 else "assert_false"
            if n != 1:
                raise KernelError(RUNTIME_ERROR, f"{fname} expects 1 argument(s), got {n}",
                                  line, col)
            v = args[0]
            if type(v) is not bool:
                raise KernelError(RUNTIME_ERROR, f"{fname} needs bool, got {_tname(v)}",
                                  line, col)
            if v != (code == 1):
                raise KernelError(ASSERTION_FAILURE,
                                  f"{fname} failed: condition was {show(v)}", line, col)
            return None
        if code == 3:
            if n != 1:
                raise KernelError(RUNTIME_ERROR, f"len expects 1 argument(s), got {n}",
                                  line, col)
            if type(args[0]) is not str:
                raise KernelError(RUNTIME_ERROR, f"len needs string, got {_tname(args[0])}",
                                  line, col)
            return len(args[0])
        if n != 2:
            raise KernelError(RUNTIME_ERROR, f"char_at expects 2 argument(s), got {n}",
                              line, col)
        s, i = args
        if type(s) is not str or type(i) is not int:
            raise KernelError(RUNTIME_ERROR,
                              f"char_at needs (string, int), got ({_tname(s)}, {_tname(i)})",
                              line, col)
        if i < 0 or i >= len(s):
            raise KernelError(RUNTIME_ERROR,
                              f"char_at index {i} out of range for length {len(s)}",
                              line, col)
        return s[i]


def execute(funcs, entry, budget, max_depth=256):
    """Run the zero-argument function ``entry`` from the table ``funcs``.

    Returns ``(status, message, frames, steps, lines, arms)`` where ``frames``
    lists ``(function, file, line, col)`` innermost first, ``lines`` is the
    set of executed statement ids and ``arms`` the set of ``bid*2 + arm``
    (arm 0 = then/taken, 1 = else/exit).
    """
    m = _Machine(funcs, budget, max_depth)
    try:
        m.call(funcs[entry], [])
    except KernelError as e:
        return (e.kind, e.message, e.frames, m.steps, m.lines, m.arms)
    except RecursionError:
        return (RUNTIME_ERROR, "expression nesting too deep", [], m.steps, m.lines, m.arms)
    return (PASS, "", [], m.steps, m.lines, m.arms)


def call_value(funcs, name, args, budget, max_depth=256):
    """Call ``name`` with ``args`` and return ``(status, value, message)``."""
    m = _Machine(funcs, budget, max_depth)
    try:
        v = m.call(funcs[name], list(args))
    except KernelError as e:
        return (e.kind, None, e.message)
    except RecursionError:
        return (RUNTIME_ERROR, None, "expression nesting too deep")
    return (PASS, v, "")
