"""Goal optimization on the blood-analyzer model, then the same question
under a decision, showing how staged choices move the optimum.

Run from the repository root:  python3 demos/optimize_bloodlab.py
"""

from pathlib import Path

from featline.parser import parse
from featline.session import Restriction, Session

MODEL = Path(__file__).resolve().parent.parent / "tests/fixtures/bloodlab.fm"


def describe(sol):
    techniques = [n for n in ("Chronometric", "Colorimetric", "Immunologic")
                  if sol[n] == 1]
    return ", ".join(techniques)


def main():
    m, diagnostics = parse(MODEL.read_text())
    assert m is not None and not diagnostics

    s = Session(m)
    for goal in ("cost", "revenue"):
        res = s.optimize(goal)
        word = "proven" if res.proven else "best found"
        print(f"{goal}: {res.value} ({word}) using {describe(res.assignment)}")

    print("\nnow insist on the TCA launch test")
    s.decide("LaunchTest.TestType", Restriction.fix("TCA"))
    chrono = s.var_view("Chronometric")
    speed = s.var_view("Chronometric.Speed")
    print(f"propagation: Chronometric = {chrono.value}, "
          f"Speed domain {speed.domain!r}")

    res = s.optimize("cost")
    print(f"cost under TCA: {res.value} using {describe(res.assignment)}")


if __name__ == "__main__":
    main()
