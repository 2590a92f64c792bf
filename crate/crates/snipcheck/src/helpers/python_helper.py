# Parse and run Python snippets for snipcheck.
#
#   python_helper.py serve                  JSON-lines parse server on stdin/stdout
#   python_helper.py run ENGINE FILE        execute FILE, print one JSON result
#
# Works under Python 3 and, when a real interpreter is configured, Python 2.
from __future__ import print_function

import ast
import json
import os
import sys
import warnings

PY2 = sys.version_info[0] == 2

warnings.simplefilter("ignore")


def describe(exc):
    name = type(exc).__name__
    if isinstance(exc, SyntaxError):
        return "%s: %s" % (name, exc.msg or "invalid syntax")
    text = str(exc)
    return "%s: %s" % (name, text) if text else name


def parse_native(code):
    compile(code, "<snippet>", "exec", ast.PyCF_ONLY_AST)


# Python 2 grammar emulated on Python 3 ------------------------------------

_V3_ONLY_KEYWORDS = ("nonlocal", "async", "await")


def _v2_driver():
    from lib2to3 import pygram, pytree
    from lib2to3.pgen2 import driver

    return driver.Driver(pygram.python_grammar, convert=pytree.convert)


_DRIVER = None


def _check_v2_tree(tree):
    from lib2to3 import pygram, pytree
    from lib2to3.pgen2 import token

    syms = pygram.python_symbols
    for node in tree.pre_order():
        if isinstance(node, pytree.Leaf):
            if node.type == token.NAME and node.value in _V3_ONLY_KEYWORDS:
                raise SyntaxError("invalid syntax")
            if node.type == token.STRING:
                prefix = node.value[: len(node.value) - len(node.value.lstrip("rRbBuUfF"))]
                if "f" in prefix.lower():
                    raise SyntaxError("invalid syntax")
            if node.type in (token.RARROW, token.ASYNC, token.AWAIT):
                raise SyntaxError("invalid syntax")
            continue
        if node.type in (syms.typedargslist, syms.varargslist):
            kids = node.children
            for i, kid in enumerate(kids):
                if isinstance(kid, pytree.Leaf) and kid.value == "*":
                    nxt = kids[i + 1] if i + 1 < len(kids) else None
                    if nxt is None or (isinstance(nxt, pytree.Leaf) and nxt.value == ","):
                        raise SyntaxError("invalid syntax")
                if isinstance(kid, pytree.Leaf) and kid.value == "/":
                    raise SyntaxError("invalid syntax")
        if node.type == syms.tname:
            raise SyntaxError("invalid syntax")
        if node.type == syms.yield_arg:
            raise SyntaxError("invalid syntax")
        if node.type == syms.expr_stmt and any(
            getattr(kid, "type", None) == syms.annassign for kid in node.children
        ):
            raise SyntaxError("invalid syntax")
        if node.type == syms.star_expr:
            raise SyntaxError("invalid syntax")


def _translate(code):
    from lib2to3 import refactor

    fixers = refactor.get_fixers_from_package("lib2to3.fixes")
    tool = refactor.RefactoringTool(fixers)
    return str(tool.refactor_string(code if code.endswith("\n") else code + "\n", "<snippet>"))


def parse_v2_emulated(code):
    global _DRIVER
    from lib2to3.pgen2.parse import ParseError
    from lib2to3.pgen2.tokenize import TokenError
    from lib2to3.pgen2 import token

    if _DRIVER is None:
        _DRIVER = _v2_driver()
    src = code if code.endswith("\n") else code + "\n"
    try:
        tree = _DRIVER.parse_string(src)
    except ParseError as e:
        if e.type == token.INDENT:
            raise IndentationError("unexpected indent")
        raise SyntaxError("invalid syntax")
    except TokenError as e:
        raise SyntaxError("unexpected EOF while parsing" if "EOF" in str(e) else "invalid syntax")
    _check_v2_tree(tree)
    # Checks the grammar leaves to the compiler (assignment targets and
    # the like) on the Python 3 translation.
    try:
        translated = _translate(code)
    except Exception:
        return
    try:
        compile(translated, "<snippet>", "exec", ast.PyCF_ONLY_AST)
    except (TabError, IndentationError):
        pass
    except SyntaxError as e:
        raise SyntaxError(e.msg)


def parse(engine, code):
    if engine == "v2" and not PY2:
        parse_v2_emulated(code)
    else:
        parse_native(code)


def serve():
    out = sys.stdout
    for line in iter(sys.stdin.readline, ""):
        line = line.strip()
        if not line:
            continue
        request = json.loads(line)
        try:
            parse(request["engine"], request["code"])
            reply = {"status": "pass"}
        except (SyntaxError, ValueError, TypeError, MemoryError, RecursionError if not PY2 else RuntimeError) as e:
            reply = {"status": "fail", "error": describe(e)}
        out.write(json.dumps(reply) + "\n")
        out.flush()


# Execution -------------------------------------------------------------------

def _guard(scratch):
    scratch = os.path.realpath(scratch)
    blocked = (
        "socket.connect",
        "socket.bind",
        "socket.sendto",
        "subprocess.Popen",
        "os.system",
        "os.exec",
        "os.posix_spawn",
        "os.spawn",
        "os.fork",
        "os.forkpty",
        "os.kill",
        "os.killpg",
        "pty.spawn",
        "ctypes.dlopen",
    )
    writing = ("os.remove", "os.rename", "os.rmdir", "os.mkdir", "os.chmod", "os.chown", "os.link", "os.symlink", "os.truncate", "shutil.rmtree", "shutil.move", "shutil.copyfile")

    def inside(path):
        try:
            path = os.fsdecode(path)
        except TypeError:
            return False
        real = os.path.realpath(path)
        return real == scratch or real.startswith(scratch + os.sep)

    def hook(event, args):
        if event in blocked:
            raise PermissionError("sandbox: %s blocked" % event)
        if event == "open":
            path, mode = args[0], args[1]
            flags = args[2] if len(args) > 2 else 0
            wants_write = (mode is not None and any(c in mode for c in "wax+")) or (
                isinstance(flags, int) and flags & (os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND)
            )
            if wants_write and not isinstance(path, int) and not inside(path):
                raise PermissionError("sandbox: write outside scratch directory")
        elif event in writing:
            if args and not inside(args[0]):
                raise PermissionError("sandbox: %s outside scratch directory" % event)

    sys.addaudithook(hook)


def run(engine, path):
    with open(path) as f:
        code = f.read()
    if engine == "v2" and not PY2:
        code = _translate(code)
    result_fd = os.dup(1)
    devnull = os.open(os.devnull, os.O_WRONLY)
    os.dup2(devnull, 1)
    os.dup2(devnull, 2)
    reply = {"status": "pass"}
    try:
        code_obj = compile(code, "<snippet>", "exec")
        namespace = {"__name__": "__main__", "__builtins__": __builtins__}
        if hasattr(sys, "addaudithook"):
            _guard(os.getcwd())
        exec(code_obj, namespace)
    except SystemExit as e:
        if e.code not in (None, 0):
            reply = {"status": "fail", "error": "SystemExit: %s" % (e.code,)}
    except BaseException as e:
        reply = {"status": "fail", "error": describe(e)}
    try:
        sys.stdout.flush()
    except BaseException:
        pass
    os.write(result_fd, (json.dumps(reply) + "\n").encode("utf-8"))
    os._exit(0)


def main(argv):
    if argv[1:2] == ["serve"]:
        serve()
    elif len(argv) == 4 and argv[1] == "run":
        run(argv[2], argv[3])
    else:
        sys.stderr.write("usage: python_helper.py serve | run ENGINE FILE\n")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
