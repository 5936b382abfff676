"""Smoke test for the pycovgen extension: parse, select goals, search, compare."""

import sys

import pycovgen

SRC = """
class C {
  public int f(int x) {
    if (x == 10) { return 1; }
    return 0;
  }
}
"""


def main():
    unit = pycovgen.parse(SRC)
    assert unit.name == "C" and unit.branches == 2, unit

    dump = pycovgen.goal_set(unit, mode="single:BC")
    assert dump["total"] == 2, dump

    smart = pycovgen.goal_set(unit, mode="smart")
    original = pycovgen.goal_set(unit, mode="original")
    assert smart["total"] <= original["total"]

    res = pycovgen.search(unit, mode="single:BC", budget=20000, seed=1)
    assert res["covered"] == res["goals"] == 2, res["covered"]
    assert res["events"][0]["event"] == "start"
    assert any("f(10)" in t for t in res["tests"]), res["tests"]

    corpus = pycovgen.generate_corpus(seed=3, small=1, big=0)
    assert len(corpus) == 1 and pycovgen.parse(corpus[0][1]).branches >= 50

    u, p, method = pycovgen.mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert (u, method) == (0.0, "exact") and abs(p - 0.1) < 1e-12
    assert pycovgen.vargha_delaney_a12([2.0], [1.0]) == 1.0

    try:
        pycovgen.parse("class X {")
    except ValueError:
        pass
    else:
        raise AssertionError("syntax error not raised")

    print("pycovgen smoke test ok:", unit, f"smart {smart['total']} / original {original['total']} goals")


if __name__ == "__main__":
    sys.exit(main())
