"""Smoke test for the Python bindings.

Build with `cargo build -p nonterm-py --release`, then run with the
directory holding `nonterm_py.so` (a copy or symlink of
`target/release/libnonterm_py.so`) on PYTHONPATH.
"""

import pathlib
import sys

import nonterm_py

ROOT = pathlib.Path(__file__).resolve().parent.parent


def main() -> int:
    src = (ROOT / "corpus" / "bundled" / "nested-reset.prog").read_text()
    ts = nonterm_py.TransitionSystem.parse(src)
    print(ts)
    assert ts.variables == ["x", "y"]
    assert "out" in ts.locations
    assert ts.reverse().n_transitions == ts.n_transitions

    res = nonterm_py.prove(ts, check="1", c=1, d=1, D=0, timeout=30)
    print(res)
    assert res.answer == "NO", res
    ok, report = res.certificate.validate()
    print(report)
    assert ok

    again = nonterm_py.Certificate.parse(res.certificate.to_text())
    assert again.kind == "check1"
    assert again.validate(-5, 110)[0]

    loop = nonterm_py.TransitionSystem.parse("var x\nwhile x >= 1 do x := x - 1 od")
    res = nonterm_py.prove(loop, check="1", c=1, d=1, D=0, timeout=30)
    assert res.answer == "MAYBE" and res.certificate is None
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
