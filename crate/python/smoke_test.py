"""Build the extension, import it and check a handful of known values.

Run from the repository root:  python3 python/smoke_test.py
"""
import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build():
    subprocess.run(
        ["cargo", "build", "-p", "drinfeld-py", "--release", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "libdrinfeld_py.so"
    tmp = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "drinfeld_py.so")
    sys.path.insert(0, str(tmp))


def main():
    build()
    import drinfeld_py as d

    h = d.expand("h", q=3, prec=12)
    assert h[1] == "2" and h[5] == "2", h
    assert h[7] == "T^3+2*T", h
    assert all(i % 2 == 1 for i in h), "h is supported on odd indices at q=3"

    rows = d.goss("toy", 4, q=3)
    assert rows == ["X", "X^2", "X^3", "X^4 + (2)X^2"], rows

    th = d.hecke("h", "T", op="T", q=3, prec=10)
    # T_P h = P h
    assert th == {1: "2*T", 5: "2*T", 7: "T^4+2*T^2", 9: "2*T"}, th

    m = json.loads(d.matrix("T", 8, 0, cusp=False, q=3))
    assert "char_poly" in m, m

    ok, report = d.verify("dimension-formula", q=3)
    assert ok, report
    assert json.loads(report)["elapsed_ms"] == 0

    assert "commute" in d.suite_names()
    try:
        d.expand("nonsense")
    except ValueError:
        pass
    else:
        raise AssertionError("bad form name should raise")
    print("smoke test ok")


if __name__ == "__main__":
    main()
