# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled execution kernel; a typed port of ``_kernel.py``.

Both kernels must return identical results for identical inputs.
"""

from ._kernel import (
    ASSERTION_FAILURE, PASS, RUNTIME_ERROR, STEP_BUDGET_EXCEEDED, KernelError,
    _tname, _wrap, show,
)

cdef extern from *:
    bint add_overflow "__builtin_add_overflow" (long long a, long long b, long long *r)
    bint sub_overflow "__builtin_sub_overflow" (long long a, long long b, long long *r)
    bint mul_overflow "__builtin_mul_overflow" (long long a, long long b, long long *r)

cdef extern from "<limits.h>":
    long long LL_MIN "LLONG_MIN"

_SYMS = ("+", "-", "*", "/", "%", "==", "!=", "<", "<=", ">", ">=")


cdef class _Machine:
    cdef dict funcs
    cdef long long budget
    cdef long long steps
    cdef int max_depth
    cdef int depth
    cdef set lines
    cdef set arms
    cdef object retval

    def __init__(self, dict funcs, long long budget, int max_depth):
        self.funcs = funcs
        self.budget = budget
        self.max_depth = max_depth
        self.steps = 0
        self.depth = 0
        self.lines = set()
        self.arms = set()
        self.retval = None

    cdef object call(self, tuple fn, list args):
        cdef tuple params = fn[0]
        cdef int returned
        name = fn[2]
        if len(args) != len(params):
            raise KernelError(RUNTIME_ERROR,
                              f"function {name} expects {len(params)} argument(s), got {len(args)}",
                              0, 0)
        if self.depth >= self.max_depth:
            raise KernelError(RUNTIME_ERROR,
                              f"call depth exceeded {self.max_depth} frames", 0, 0)
        self.depth += 1
        cdef dict env = dict(zip(params, args))
        try:
            returned = self.block(<tuple>fn[1], env)
        except KernelError as e:
            e.frames.append((name, fn[3], e.line, e.col))
            self.depth -= 1
            raise
        self.depth -= 1
        if returned:
            v = self.retval
            self.retval = None
            return v
        return None

    cdef int block(self, tuple stmts, dict env) except -1:
        cdef tuple s
        cdef int op
        cdef long long bid
        cdef bint first
        for s in stmts:
            op = s[0]
            if self.steps >= self.budget:
                raise KernelError(STEP_BUDGET_EXCEEDED,
                                  f"step budget of {self.budget} statements exhausted",
                                  s[2], s[3])
            self.steps += 1
            self.lines.add(s[1])
            if op == 0 or op == 1:
                name = s[4]
                if op == 1 and name not in env:
                    raise KernelError(RUNTIME_ERROR, f"assignment to undeclared variable {name}",
                                      s[2], s[3])
                env[name] = self.eval(<tuple>s[5], env)
            elif op == 5:
                self.eval(<tuple>s[4], env)
            elif op == 2:
                c = self.eval(<tuple>s[4], env)
                if type(c) is not bool:
                    raise KernelError(RUNTIME_ERROR,
                                      f"if condition must be bool, got {_tname(c)}",
                                      s[2], s[3])
                bid = s[7]
                if c:
                    self.arms.add(bid * 2)
                    if self.block(<tuple>s[5], env):
                        return 1
                else:
                    self.arms.add(bid * 2 + 1)
                    if self.block(<tuple>s[6], env):
                        return 1
            elif op == 3:
                cond = <tuple>s[4]
                body = <tuple>s[5]
                bid = s[6]
                first = True
                while True:
                    if not first:
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
                        return 1
            else:
                e = s[4]
                self.retval = None if e is None else self.eval(<tuple>e, env)
                return 1
        return 0

    cdef object eval(self, tuple e, dict env):
        cdef int op = e[0]
        cdef list args
        if op == 1:
            try:
                return env[e[1]]
            except KeyError:
                raise KernelError(RUNTIME_ERROR, f"undefined identifier {e[1]}",
                                  e[2], e[3]) from None
        if op == 0:
            return e[1]
        if op == 2:
            return self.binop(e[1], self.eval(<tuple>e[2], env), self.eval(<tuple>e[3], env),
                              e[4], e[5])
        if op == 3 or op == 4:
            a = self.eval(<tuple>e[1], env)
            if type(a) is not bool:
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {'&&' if op == 3 else '||'} needs bool operands, got {_tname(a)}",
                                  e[3], e[4])
            if op == 3 and not a:
                return False
            if op == 4 and a:
                return True
            b = self.eval(<tuple>e[2], env)
            if type(b) is not bool:
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {'&&' if op == 3 else '||'} needs bool operands, got {_tname(b)}",
                                  e[3], e[4])
            return b
        if op == 7:
            fn = self.funcs.get(e[1])
            if fn is None:
                raise KernelError(RUNTIME_ERROR, f"undefined function {e[1]}", e[3], e[4])
            args = [self.eval(<tuple>a, env) for a in <tuple>e[2]]
            try:
                return self.call(<tuple>fn, args)
            except KernelError as err:
                err.line = e[3]
                err.col = e[4]
                raise
        if op == 8:
            args = [self.eval(<tuple>a, env) for a in <tuple>e[2]]
            return self.builtin(e[1], args, e[3], e[4])
        if op == 5:
            v = self.eval(<tuple>e[1], env)
            if type(v) is not bool:
                raise KernelError(RUNTIME_ERROR, f"operator ! needs bool, got {_tname(v)}",
                                  e[2], e[3])
            return not v
        v = self.eval(<tuple>e[1], env)
        if type(v) is not int:
            raise KernelError(RUNTIME_ERROR, f"unary - needs int, got {_tname(v)}",
                              e[2], e[3])
        return _wrap(-v)

    cdef object binop(self, int code, object a, object b, object line, object col):
        cdef long long x, y, r, q
        if code >= 7 or code <= 4:
            if type(a) is not int or type(b) is not int:
                raise KernelError(RUNTIME_ERROR,
                                  f"operator {_SYMS[code]} needs int operands, got {_tname(a)} and {_tname(b)}",
                                  line, col)
            x = a
            y = b
            if code == 0:
                if add_overflow(x, y, &r):
                    return _wrap(a + b)
                return r
            if code == 1:
                if sub_overflow(x, y, &r):
                    return _wrap(a - b)
                return r
            if code == 2:
                if mul_overflow(x, y, &r):
                    return _wrap(a * b)
                return r
            if code == 3 or code == 4:
                if y == 0:
                    raise KernelError(RUNTIME_ERROR, "division by zero", line, col)
                if x == LL_MIN and y == -1:
                    return LL_MIN if code == 3 else 0
                q = x / y  # C division truncates toward zero
                if code == 3:
                    return q
                return x - y * q
            if code == 7:
                return x < y
            if code == 8:
                return x <= y
            if code == 9:
                return x > y
            return x >= y
        if type(a) is not type(b):
            raise KernelError(RUNTIME_ERROR,
                              f"operator {_SYMS[code]} compares {_tname(a)} with {_tname(b)}",
                              line, col)
        if code == 5:
            return a == b
        return a != b

    cdef object builtin(self, int code, list args, object line, object col):
        cdef Py_ssize_t n = len(args)
        if code == 0:
            if n != 2:
                raise KernelError(RUNTIME_ERROR, f"assert_eq expects 2 argument(s), got {n}",
                                  line, col)
            actual = args[0]
            expected = args[1]
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
        s = args[0]
        i = args[1]
        if type(s) is not str or type(i) is not int:
            raise KernelError(RUNTIME_ERROR,
                              f"char_at needs (string, int), got ({_tname(s)}, {_tname(i)})",
                              line, col)
        if i < 0 or i >= len(s):
            raise KernelError(RUNTIME_ERROR,
                              f"char_at index {i} out of range for length {len(s)}",
                              line, col)
        return s[i]


def execute(dict funcs, entry, long long budget, int max_depth=256):
    m = _Machine(funcs, budget, max_depth)
    try:
        m.call(funcs[entry], [])
    except KernelError as e:
        return (e.kind, e.message, e.frames, m.steps, m.lines, m.arms)
    return (PASS, "", [], m.steps, m.lines, m.arms)


def call_value(dict funcs, name, args, long long budget, int max_depth=256):
    m = _Machine(funcs, budget, max_depth)
    try:
        v = m.call(funcs[name], list(args))
    except KernelError as e:
        return (e.kind, None, e.message)
    return (PASS, v, "")
