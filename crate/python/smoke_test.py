"""Smoke test for the Python bindings.

Build the extension first, either with `maturin develop -m crates/py/Cargo.toml`
or `cargo build -p liquid-mini-py --release` (this script then loads
target/release/libliquid_mini_py.so directly).
"""

import importlib.machinery
import importlib.util
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import liquid_mini_py

        return liquid_mini_py
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libliquid_mini_py.so", "libliquid_mini_py.dylib", "liquid_mini_py.dll"):
            lib = ROOT / "target" / profile / name
            if lib.exists():
                loader = importlib.machinery.ExtensionFileLoader("liquid_mini_py", str(lib))
                spec = importlib.util.spec_from_loader("liquid_mini_py", loader)
                mod = importlib.util.module_from_spec(spec)
                loader.exec_module(mod)
                return mod
    sys.exit("liquid_mini_py not built")


lm = load()

MAX = """{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}
max x y = if x >= y then x else y
"""

BAD = """{-@ max :: x:Int -> y:Int -> {v:Int | v >= x && v >= y} @-}
max x y = if x >= y then y else x
"""

r = lm.check_source(MAX, "max.lm")
assert r.safe and r.verdict == "SAFE" and r.exit_code == 0, r

r = lm.check_source(BAD, "bad.lm")
assert r.verdict == "UNSAFE" and r.exit_code == 1, r
d = r.diagnostics[0]
assert (d.line, d.col) == (2, 26), d
assert "refinement type error" in d.message
print(r.render(), end="")

r = lm.check_source("f x = = 1\n")
assert r.verdict == "ERROR" and r.exit_code == 2 and r.error

assert lm.infer_shapes(MAX) == {"max": "Int -> Int -> Int"}
cs = lm.constraints(MAX, "max.lm")
assert any(c.endswith("x:Int, y:Int, x >= y |- v = x <: v >= x && v >= y") for c in cs), cs
assert lm.parse_qualifier("v >= 0").startswith("v >= 0")

corpus = sorted(str(p) for p in (ROOT / "corpus").glob("*.lm"))
reports = lm.check_files(corpus, jobs=4)
verdicts = {pathlib.Path(r.path).stem: r.verdict for r in reports}
assert verdicts["avl_insert"] == "SAFE", verdicts
assert verdicts["head_client_unsafe"] == "UNSAFE", verdicts

try:
    lm.check_source(MAX, timeout=0)
except ValueError:
    pass
else:
    raise AssertionError("non-positive timeout accepted")

print("python smoke test passed")
